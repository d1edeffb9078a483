#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/profiler.hpp"
#include "kgintent/schema.hpp"

namespace kgintent {

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_users = 40;
  std::size_t n_datasets_cat = 68;
  std::size_t n_datasets_num = 28;
  std::size_t tasks_per_dataset = 5;
  double constraint_rate = 0.5;   // chance of each of the two constraint slots
  double preference_rate = 0.3;   // share of constraints that are soft (isHard=false)
  std::size_t max_steps = 3;
  double intent_noise = 0.05;     // tasks whose intent disagrees with the target type

  void check() const;
};

SynthConfig synth_config_from_json(const std::string& json_text);
std::string synth_config_to_json(const SynthConfig& cfg);

// Deterministic dataset profiles; categorical ones first.
std::vector<DatasetProfile> synth_dataset_profiles(const SynthConfig& cfg);

// The interaction corpus (users, dataset characteristics, tasks, workflows,
// feedback) without the schema triples. Same seed -> identical graph.
Graph synthesize(const Schema& schema, const SynthConfig& cfg);

// Schema triples plus the synthesized corpus.
Graph synthesize_full(const Schema& schema, const SynthConfig& cfg);

struct CorpusCounts {
  std::size_t experiment = 0;      // tasks, workflows, constraints, users, feedback
  std::size_t characteristic = 0;  // triples whose subject is a Dataset
  std::size_t schema = 0;
};

CorpusCounts count_corpus(const Graph& full, const Graph& schema_graph);

}  // namespace kgintent
