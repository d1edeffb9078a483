#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgintent/kge.hpp"
#include "kgintent/lp_view.hpp"

namespace kgintent {

struct SplitSpec {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
  std::uint64_t seed = 42;
  void check() const;
};

struct SplitResult {
  std::vector<Fact> train, valid, test;
  std::size_t moved_to_train = 0;  // triples reassigned to satisfy coverage
  bool degenerate = false;         // valid or test ended up empty
  double realized_train() const;
  double realized_valid() const;
  double realized_test() const;
};

// Per-relation stratified random split, followed by moving every valid/test
// triple whose head, tail or relation is absent from train into train.
SplitResult split(const std::vector<Fact>& facts, const SplitSpec& spec);

enum class RankMode : std::uint8_t { kRaw, kRangeFiltered, kExcludeKnown };
enum class Sides : std::uint8_t { kHead, kTail, kBoth };

std::string_view mode_name(RankMode m);
std::optional<RankMode> parse_mode(std::string_view s);

struct SideMetrics {
  double hits1 = 0, hits3 = 0, hits10 = 0;
  double mean_rank = 0, mrr = 0;
  std::size_t n = 0;
};

struct EvalReport {
  RankMode mode = RankMode::kRaw;
  SideMetrics head, tail;
  std::size_t skipped = 0;  // test triples with an unembedded term
  std::string to_json() const;
};

struct EvalOptions {
  RankMode mode = RankMode::kRaw;
  Sides sides = Sides::kBoth;
  const CandidateIndex* candidates = nullptr;   // required for kRangeFiltered
  const std::vector<NamedFact>* known = nullptr;  // required for kExcludeKnown
};

// Ranks the true entity of every test triple among the candidates with the
// tie-aware realistic rank. Range filtering always keeps the true entity.
EvalReport evaluate(const EmbeddingState& s, const std::vector<NamedFact>& test, const EvalOptions& opts);

// Everything needed to train and evaluate on one corpus.
struct LpData {
  LpView view;
  SplitResult split;
  CandidateIndex candidates;
};

LpData prepare_lp_data(const Graph& g, const Schema& schema, const SplitSpec& spec);

// --- Search -----------------------------------------------------------------

struct SearchSpace {
  std::vector<ModelKind> models;
  std::vector<std::size_t> dims;
  std::vector<double> lrs;
  std::vector<std::size_t> npps;
  void check() const;
  std::size_t size() const { return models.size() * dims.size() * lrs.size() * npps.size(); }
};

struct GridRow {
  ModelConfig config;
  double valid_hits3 = 0;  // best validation tail Hits@3
  std::size_t epochs = 0;
  bool diverged = false;
  std::string error;
  EvalReport report;  // test-set report in the requested mode
  bool cached = false;
};

struct GridOptions {
  ModelConfig base;
  EarlyStopConfig stop;
  RankMode mode = RankMode::kRaw;
  std::optional<std::filesystem::path> cache_dir;
  std::function<void(const GridRow&)> on_row;
};

std::vector<GridRow> grid_search(const LpData& data, const SearchSpace& space, const GridOptions& opts);
std::string grid_csv(const std::vector<GridRow>& rows);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s);

struct Range {
  double lo = 0, hi = 1;
};

struct TpeSpace {
  ModelKind model = ModelKind::kTransH;
  Range dim{2, 256};
  Range lr{1e-4, 0.1};
  Range npp{1, 100};
};

struct Trial {
  ModelConfig config;
  double objective = 0;
  double wall_seconds = 0;
  bool diverged = false;
};

struct SearchTrace {
  std::vector<Trial> trials;
  std::size_t best = 0;
  std::string to_jsonl() const;
  std::vector<double> running_best() const;
};

using Objective = std::function<double(const ModelConfig&)>;

struct TpeOptions {
  std::size_t n_iter = 100;
  std::size_t n_startup = 10;
  double gamma = 0.25;
  std::size_t n_candidates = 24;
  std::uint64_t seed = 42;
  std::function<void(const Trial&)> on_trial;
};

// Tree-structured Parzen estimator over log-scaled (dim, lr, npp). The first
// n_startup trials are random draws identical to random_search with the same
// seed.
SearchTrace tpe_search(const Objective& f, const TpeSpace& space, const ModelConfig& base,
                       const TpeOptions& opts);
SearchTrace random_search(const Objective& f, const TpeSpace& space, const ModelConfig& base,
                          std::size_t n_iter, std::uint64_t seed);

// Trains with early stopping and returns the best validation tail Hits@3
// (0 when training diverges).
double validation_objective(const LpData& data, const ModelConfig& cfg, const EarlyStopConfig& stop);

}  // namespace kgintent
