#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/kge.hpp"
#include "kgintent/lp_view.hpp"
#include "kgintent/query.hpp"
#include "kgintent/schema.hpp"

namespace kgintent {

// A trained embedding together with the literal encoding it was trained
// under and the triples it saw (rehearsal material for fine-tuning).
struct LpModel {
  EmbeddingState state;
  LiteralEncoder encoder;
  std::vector<Fact> train;

  // Rebuilds `train` from every view triple of g the state can resolve.
  static LpModel from_graph(EmbeddingState state, LiteralEncoder encoder, const Graph& g);

  void save(const std::filesystem::path& path) const;
  // The training triples are recovered from g.
  static LpModel load(const std::filesystem::path& path, const Graph& g);
};

enum class RecMethod : std::uint8_t { kLp, kQuery, kAuto };

std::string_view method_name(RecMethod m);
std::optional<RecMethod> parse_method(std::string_view s);

struct Recommendation {
  std::string target_relation;
  std::vector<std::pair<std::string, double>> items;  // score descending, ties by IRI
  RecMethod method = RecMethod::kLp;
  TaskContext context;
  int level_used = 0;  // ladder level when method is query
  std::string template_id;
  bool fine_tuned = false;  // the context was materialised and fine-tuned

  std::string to_json() const;
};

class UnsupportedRelation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoRecommendation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Relations the anticipator can complete.
const std::vector<std::string>& supported_relations();

// Schema-valid candidates for (task, relation, ?) given the fixed inputs.
// Throws UnsupportedRelation.
std::set<std::string> candidates_for(const Schema& schema, const Graph& g, const TaskContext& ctx,
                                     const std::string& relation);

struct AnticipateOptions {
  std::size_t k = 3;
  bool filter = true;     // restrict to candidates_for; off ranks every embedded entity
  bool fine_tune = true;  // materialise and fine-tune a task for the context
  bool surrogate = true;  // without fine-tuning, score the initial vector directly
  FineTuneOptions tune;
  std::optional<std::string> task;  // an already embedded task to score from
};

// Ranks candidates by the embedding score of (task, relation, candidate).
// With neither fine-tuning nor the surrogate enabled, answers from the query
// ladder instead (method query).
Recommendation anticipate(const LpModel& model, const Schema& schema, const Graph& g, const TaskContext& ctx,
                          const std::string& relation, const AnticipateOptions& opts = {});

// Initial vector of a fresh task for ctx: mean of the embedded tasks of the
// same user on datasets with the same target type, else of every task on
// such datasets, else of the user's tasks, else of all tasks.
std::optional<std::vector<double>> context_surrogate(const EmbeddingState& s, const Graph& g,
                                                     const TaskContext& ctx);

// Query ladder, embeddings or the ladder with embeddings as the fallback
// when it has no data. Throws NoRecommendation when neither can answer.
Recommendation recommend(const Graph& g, const Schema& schema, const LpModel* model, const TaskContext& ctx,
                         QueryTarget target, RecMethod method, const AnticipateOptions& opts = {},
                         const TemplateSet& templates = TemplateSet::defaults());

std::string context_to_json(const TaskContext& ctx);
// Throws std::invalid_argument on malformed input.
TaskContext context_from_json(const std::string& text);

}  // namespace kgintent
