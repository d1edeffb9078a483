#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/pattern.hpp"
#include "kgintent/schema.hpp"

namespace kgintent {

// Fixed inputs of a task being specified. Filters restrict the user/task
// population: "expertise" (string), "min_instances" and "max_instances"
// (dataset size bounds, inclusive).
struct TaskContext {
  std::string user;
  std::optional<std::string> dataset;
  std::optional<std::string> intent;
  std::optional<std::string> metric;
  std::vector<std::string> constraints;  // algorithms
  std::map<std::string, std::string> filters;
};

enum class QueryTarget : std::uint8_t { kIntent, kMetric, kConstraint };

std::string_view target_name(QueryTarget t);
std::optional<QueryTarget> parse_target(std::string_view s);
// The relation that links a task to a value of the target.
std::string_view target_relation(QueryTarget t);

struct LadderResult {
  std::vector<std::pair<std::string, std::size_t>> items;
  int level_used = 0;  // 0 when every level came back empty
  std::string template_id;

  bool no_data() const { return level_used == 0; }
};

// One rung of the ladder: atoms over ?task. "$user", "$dataset" and "$intent"
// are replaced by context values; atoms mentioning "$intent" are dropped when
// the intent is open, and a template mentioning "$dataset" is skipped when
// no dataset is fixed.
struct QueryTemplate {
  std::string id;
  int level = 0;
  std::vector<std::array<std::string, 3>> atoms;
};

class TemplateSet {
 public:
  // The four default levels.
  static TemplateSet defaults();
  // {"<id>": {"level": n, "atoms": [["?task", "requestedBy", "$user"], ...]}, ...}
  static TemplateSet from_json(const std::string& text);
  std::string to_json() const;

  const std::vector<QueryTemplate>& templates() const { return templates_; }

 private:
  std::vector<QueryTemplate> templates_;  // ascending level
};

// The pattern a template expands to for a context and target, including the
// target atoms and any population filters. nullopt when the template needs a
// context value that is not set.
std::optional<Pattern> instantiate(const QueryTemplate& t, const TaskContext& ctx, QueryTarget target);

// Walks the ladder and returns the first nonempty top-k, keeping only
// schema-valid items for the target (metrics, intents, algorithms).
LadderResult recommend_by_query(const Graph& g, const Schema& schema, const TaskContext& ctx,
                                QueryTarget target, std::size_t k = 3,
                                const TemplateSet& templates = TemplateSet::defaults());

}  // namespace kgintent
