#include "kgintent/query.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;
using nlohmann::json;

std::string_view target_name(QueryTarget t) {
  switch (t) {
    case QueryTarget::kIntent: return "intent";
    case QueryTarget::kMetric: return "metric";
    case QueryTarget::kConstraint: return "constraint";
  }
  return "?";
}

std::optional<QueryTarget> parse_target(std::string_view s) {
  if (s == "intent" || s == v::kHasIntent) return QueryTarget::kIntent;
  if (s == "metric" || s == v::kHasRequirement) return QueryTarget::kMetric;
  if (s == "constraint" || s == v::kHasConstraint) return QueryTarget::kConstraint;
  return std::nullopt;
}

std::string_view target_relation(QueryTarget t) {
  switch (t) {
    case QueryTarget::kIntent: return v::kHasIntent;
    case QueryTarget::kMetric: return v::kHasRequirement;
    case QueryTarget::kConstraint: return v::kHasConstraint;
  }
  return v::kHasIntent;
}

namespace {

constexpr const char* kDefaultTemplates = R"({
  "L1_user_dataset": {"level": 1, "atoms": [
    ["?task", "requestedBy", "$user"], ["?task", "usesDataset", "$dataset"], ["?task", "hasIntent", "$intent"]]},
  "L2_user": {"level": 2, "atoms": [
    ["?task", "requestedBy", "$user"], ["?task", "hasIntent", "$intent"]]},
  "L3_dataset": {"level": 3, "atoms": [
    ["?task", "usesDataset", "$dataset"], ["?task", "hasIntent", "$intent"]]},
  "L4_all": {"level": 4, "atoms": [
    ["?task", "hasIntent", "$intent"]]}
})";

bool mentions(const QueryTemplate& t, std::string_view placeholder) {
  for (const auto& a : t.atoms) {
    for (const auto& s : a) {
      if (s == placeholder) return true;
    }
  }
  return false;
}

bool valid_item(const Schema& schema, QueryTarget target, const std::string& x) {
  switch (target) {
    case QueryTarget::kMetric: return schema.find_metric(x) != nullptr;
    case QueryTarget::kIntent: {
      const IntentNode* n = schema.find_node(x);
      return n && (n->level == IntentLevel::kIntent || n->level == IntentLevel::kMLTask);
    }
    case QueryTarget::kConstraint: {
      const IntentNode* n = schema.find_node(x);
      return n && n->level == IntentLevel::kAlgorithm;
    }
  }
  return false;
}

}  // namespace

TemplateSet TemplateSet::defaults() { return from_json(kDefaultTemplates); }

TemplateSet TemplateSet::from_json(const std::string& text) {
  TemplateSet set;
  json j = json::parse(text);
  if (!j.is_object() || j.empty()) throw std::invalid_argument("template file must be a nonempty object");
  for (const auto& [id, body] : j.items()) {
    QueryTemplate t;
    t.id = id;
    t.level = body.at("level").get<int>();
    if (t.level < 1) throw std::invalid_argument("template " + id + ": level must be >= 1");
    for (const auto& atom : body.at("atoms")) {
      if (!atom.is_array() || atom.size() != 3) {
        throw std::invalid_argument("template " + id + ": atoms are [subject, relation, object]");
      }
      t.atoms.push_back({atom[0].get<std::string>(), atom[1].get<std::string>(), atom[2].get<std::string>()});
    }
    set.templates_.push_back(std::move(t));
  }
  std::stable_sort(set.templates_.begin(), set.templates_.end(),
                   [](const QueryTemplate& a, const QueryTemplate& b) { return a.level < b.level; });
  return set;
}

std::string TemplateSet::to_json() const {
  json j = json::object();
  for (const auto& t : templates_) j[t.id] = {{"level", t.level}, {"atoms", t.atoms}};
  return j.dump(2);
}

std::optional<Pattern> instantiate(const QueryTemplate& t, const TaskContext& ctx, QueryTarget target) {
  if (mentions(t, "$dataset") && !ctx.dataset) return std::nullopt;
  if (mentions(t, "$user") && ctx.user.empty()) return std::nullopt;
  const bool use_intent = target != QueryTarget::kIntent && ctx.intent.has_value();
  auto slot = [&](const std::string& s) -> Slot {
    if (s.size() > 1 && s[0] == '?') return var(s.substr(1));
    if (s == "$user") return iri(ctx.user);
    if (s == "$dataset") return iri(*ctx.dataset);
    if (s == "$intent") return iri(*ctx.intent);
    if (!s.empty() && s[0] == '$') throw std::invalid_argument("unknown placeholder " + s);
    return iri(s);
  };
  Pattern p;
  for (const auto& a : t.atoms) {
    if (!use_intent && std::find(a.begin(), a.end(), "$intent") != a.end()) continue;
    p.atoms.push_back({slot(a[0]), slot(a[1]), slot(a[2])});
  }
  switch (target) {
    case QueryTarget::kIntent:
      p.atoms.push_back({var("task"), iri(std::string(v::kHasIntent)), var("x")});
      break;
    case QueryTarget::kMetric:
      p.atoms.push_back({var("task"), iri(std::string(v::kHasRequirement)), var("x")});
      break;
    case QueryTarget::kConstraint:
      p.atoms.push_back({var("task"), iri(std::string(v::kHasConstraint)), var("c")});
      p.atoms.push_back({var("c"), iri(std::string(v::kOnAlgorithm)), var("x")});
      break;
  }
  for (const auto& [key, value] : ctx.filters) {
    if (key == "expertise") {
      p.atoms.push_back({var("task"), iri(std::string(v::kRequestedBy)), var("f_user")});
      p.atoms.push_back({var("f_user"), iri(std::string(v::kHasExpertise)), Term::string(value)});
    } else if (key == "min_instances" || key == "max_instances") {
      if (std::none_of(p.atoms.begin(), p.atoms.end(), [](const Atom& a) {
            return std::holds_alternative<Variable>(a.subject) && std::get<Variable>(a.subject).name == "f_data";
          })) {
        p.atoms.push_back({var("task"), iri(std::string(v::kUsesDataset)), var("f_data")});
        p.atoms.push_back({var("f_data"), iri(std::string(v::kNumInstances)), var("f_size")});
      }
      std::int64_t bound = 0;
      try {
        bound = std::stoll(value);
      } catch (const std::exception&) {
        throw std::invalid_argument("filter " + key + " needs an integer, got " + value);
      }
      p.filters.push_back({"f_size", key == "min_instances" ? Comparator::kGe : Comparator::kLe,
                           Term::integer(bound)});
    } else {
      throw std::invalid_argument("unknown filter " + key + " (supported: expertise, min_instances, max_instances)");
    }
  }
  return p;
}

LadderResult recommend_by_query(const Graph& g, const Schema& schema, const TaskContext& ctx,
                                QueryTarget target, std::size_t k, const TemplateSet& templates) {
  if (ctx.user.empty()) throw std::invalid_argument("the context needs a user");
  if (target == QueryTarget::kMetric && !ctx.intent) {
    throw std::invalid_argument("metric recommendations need a fixed intent");
  }
  LadderResult result;
  for (const auto& t : templates.templates()) {
    auto p = instantiate(t, ctx, target);
    if (!p) continue;
    auto ranked = rank_by_frequency(g, *p, "x", std::numeric_limits<std::size_t>::max());
    for (auto& [term, count] : ranked) {
      if (result.items.size() == k) break;
      if (valid_item(schema, target, term.value())) result.items.emplace_back(term.value(), count);
    }
    if (!result.items.empty()) {
      result.level_used = t.level;
      result.template_id = t.id;
      return result;
    }
  }
  return result;
}

}  // namespace kgintent
