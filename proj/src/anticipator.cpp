#include "kgintent/anticipator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "kgintent/lp_eval.hpp"
#include "kgintent/pattern.hpp"
#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;
using nlohmann::json;

LpModel LpModel::from_graph(EmbeddingState state, LiteralEncoder encoder, const Graph& g) {
  LpModel m{std::move(state), std::move(encoder), {}};
  for (const auto& nf : view_facts(g, m.encoder)) {
    if (auto f = m.state.resolve(nf.head, nf.rel, nf.tail)) m.train.push_back(*f);
  }
  return m;
}

void LpModel::save(const std::filesystem::path& path) const {
  save_checkpoint(state, path, json{{"encoder", json::parse(encoder.to_json())}}.dump());
}

LpModel LpModel::load(const std::filesystem::path& path, const Graph& g) {
  std::string meta;
  EmbeddingState s = load_checkpoint(path, &meta);
  json j = json::parse(meta.empty() ? "{}" : meta);
  LiteralEncoder enc = j.contains("encoder") ? LiteralEncoder::from_json(j["encoder"].dump()) : LiteralEncoder::fit(g);
  return from_graph(std::move(s), std::move(enc), g);
}

std::string_view method_name(RecMethod m) {
  switch (m) {
    case RecMethod::kLp: return "lp";
    case RecMethod::kQuery: return "query";
    case RecMethod::kAuto: return "auto";
  }
  return "?";
}

std::optional<RecMethod> parse_method(std::string_view s) {
  if (s == "lp") return RecMethod::kLp;
  if (s == "query") return RecMethod::kQuery;
  if (s == "auto") return RecMethod::kAuto;
  return std::nullopt;
}

std::string context_to_json(const TaskContext& ctx) {
  json j = {{"user", ctx.user}, {"constraints", ctx.constraints}, {"filters", ctx.filters}};
  if (ctx.dataset) j["dataset"] = *ctx.dataset;
  if (ctx.intent) j["intent"] = *ctx.intent;
  if (ctx.metric) j["metric"] = *ctx.metric;
  return j.dump();
}

TaskContext context_from_json(const std::string& text) {
  TaskContext ctx;
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("context must be an object");
    ctx.user = j.at("user").get<std::string>();
    for (const char* key : {"dataset", "intent", "metric"}) {
      if (!j.contains(key) || j[key].is_null()) continue;
      auto value = j[key].get<std::string>();
      if (std::string_view(key) == "dataset") ctx.dataset = value;
      else if (std::string_view(key) == "intent") ctx.intent = value;
      else ctx.metric = value;
    }
    if (j.contains("constraints")) ctx.constraints = j["constraints"].get<std::vector<std::string>>();
    if (j.contains("filters")) {
      for (const auto& [k, val] : j["filters"].items()) {
        ctx.filters[k] = val.is_string() ? val.get<std::string>() : val.dump();
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad context: ") + e.what());
  }
  if (ctx.user.empty()) throw std::invalid_argument("bad context: user is empty");
  return ctx;
}

std::string Recommendation::to_json() const {
  json items_j = json::array();
  for (const auto& [e, s] : items) items_j.push_back({{"entity", e}, {"score", s}});
  json j = {{"target_relation", target_relation},
            {"method", std::string(method_name(method))},
            {"items", items_j},
            {"context", json::parse(context_to_json(context))},
            {"fine_tuned", fine_tuned}};
  if (method == RecMethod::kQuery) {
    j["level_used"] = level_used;
    j["template_id"] = template_id;
  }
  return j.dump();
}

const std::vector<std::string>& supported_relations() {
  static const std::vector<std::string> kRelations = {std::string(v::kHasIntent), std::string(v::kHasRequirement),
                                                      std::string(v::kHasConstraint), std::string(v::kUsesDataset)};
  return kRelations;
}

namespace {

std::string supported_list() {
  std::string out;
  for (const auto& r : supported_relations()) out += (out.empty() ? "" : ", ") + r;
  return out;
}

void check_relation(const std::string& relation) {
  const auto& rs = supported_relations();
  if (std::find(rs.begin(), rs.end(), relation) == rs.end()) {
    throw UnsupportedRelation("unsupported relation " + relation + " (supported: " + supported_list() + ")");
  }
}

Recommendation from_ladder(const LadderResult& r, const TaskContext& ctx, QueryTarget target) {
  Recommendation rec;
  rec.target_relation = std::string(target_relation(target));
  rec.method = RecMethod::kQuery;
  rec.context = ctx;
  rec.level_used = r.level_used;
  rec.template_id = r.template_id;
  for (const auto& [e, n] : r.items) rec.items.emplace_back(e, static_cast<double>(n));
  return rec;
}

QueryTarget target_of(const std::string& relation) {
  if (relation == v::kHasIntent) return QueryTarget::kIntent;
  if (relation == v::kHasRequirement) return QueryTarget::kMetric;
  if (relation == v::kHasConstraint) return QueryTarget::kConstraint;
  throw UnsupportedRelation("the query ladder cannot answer " + relation);
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

// Facts that attach a fresh task for ctx to the graph, plus the facts of any
// context entity the state has not embedded yet.
std::vector<NamedFact> context_facts(const LpModel& m, const Graph& g, const TaskContext& ctx,
                                     const std::string& task, const std::string& relation) {
  std::vector<NamedFact> out;
  out.push_back({task, std::string(v::kType), std::string(v::kTask)});
  out.push_back({task, std::string(v::kRequestedBy), ctx.user});
  if (ctx.dataset && relation != v::kUsesDataset) out.push_back({task, std::string(v::kUsesDataset), *ctx.dataset});
  if (ctx.intent && relation != v::kHasIntent) out.push_back({task, std::string(v::kHasIntent), *ctx.intent});
  if (ctx.metric && relation != v::kHasRequirement) {
    out.push_back({task, std::string(v::kHasRequirement), *ctx.metric});
  }
  if (relation != v::kHasConstraint) {
    for (const auto& c : ctx.constraints) out.push_back({task, std::string(v::kHasConstraint), c});
  }
  std::vector<std::string> subjects = {ctx.user};
  if (ctx.dataset) subjects.push_back(*ctx.dataset);
  for (const auto& s : subjects) {
    if (m.state.entities.find(s)) continue;
    for (const auto& t : g.find(Term::iri(s), std::nullopt, std::nullopt)) {
      out.push_back({s, t.relation.value(), m.encoder.entity_name(t.relation, t.object)});
    }
  }
  return out;
}

void sort_items(std::vector<std::pair<std::string, double>>& items) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

}  // namespace

std::set<std::string> candidates_for(const Schema& schema, const Graph& g, const TaskContext& ctx,
                                     const std::string& relation) {
  check_relation(relation);
  std::set<std::string> pool;
  std::string_view range;
  if (relation == v::kHasIntent) {
    range = v::kIntent;
    for (const auto& n : schema.intent_nodes()) {
      if (n.level == IntentLevel::kIntent || n.level == IntentLevel::kMLTask) pool.insert(n.iri);
    }
  } else if (relation == v::kHasRequirement) {
    range = v::kEvaluationRequirement;
    for (const auto& m : schema.metrics()) pool.insert(m.iri);
  } else if (relation == v::kHasConstraint) {
    range = v::kAlgorithm;
    for (const auto& n : schema.intent_nodes()) {
      if (n.level == IntentLevel::kAlgorithm) pool.insert(n.iri);
    }
  } else {
    range = v::kDataset;
  }
  for (const auto& t : instances_of(g, iri_term(range))) pool.insert(t.value());
  if (ctx.intent && relation != v::kHasIntent) {
    std::set<std::string> allowed;
    if (relation == v::kHasConstraint) allowed = schema.algorithms_for(*ctx.intent);
    if (relation == v::kHasRequirement) allowed = schema.metrics_for(*ctx.intent);
    if (relation == v::kHasConstraint || relation == v::kHasRequirement) {
      std::set<std::string> kept;
      std::set_intersection(pool.begin(), pool.end(), allowed.begin(), allowed.end(),
                            std::inserter(kept, kept.end()));
      pool = std::move(kept);
    }
  }
  return pool;
}

std::optional<std::vector<double>> context_surrogate(const EmbeddingState& s, const Graph& g,
                                                     const TaskContext& ctx) {
  const Term target_type = iri_term(v::kTargetType);
  std::optional<std::string> type;
  if (ctx.dataset) {
    if (auto t = g.object(Term::iri(*ctx.dataset), target_type)) type = t->value();
  }
  std::map<std::string, std::optional<std::string>> dataset_type;
  auto type_of = [&](const Term& d) -> const std::optional<std::string>& {
    auto it = dataset_type.find(d.value());
    if (it != dataset_type.end()) return it->second;
    auto t = g.object(d, target_type);
    return dataset_type.emplace(d.value(), t ? std::optional<std::string>(t->value()) : std::nullopt)
        .first->second;
  };
  std::vector<std::uint32_t> same_user_type, same_type, same_user, all;
  const Term requested_by = iri_term(v::kRequestedBy);
  for (const auto& t : g.find(std::nullopt, iri_term(v::kUsesDataset), std::nullopt)) {
    auto id = s.entities.find(t.subject.value());
    if (!id) continue;
    const bool by_user = g.contains({t.subject, requested_by, Term::iri(ctx.user)});
    const bool typed = type && type_of(t.object) == type;
    all.push_back(*id);
    if (by_user) same_user.push_back(*id);
    if (typed) same_type.push_back(*id);
    if (by_user && typed) same_user_type.push_back(*id);
  }
  for (const auto* group : {&same_user_type, &same_type, &same_user, &all}) {
    if (group->empty()) continue;
    std::vector<double> mean(s.entity.cols, 0.0);
    for (auto id : *group) {
      const double* row = s.entity.row(id);
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += row[j];
    }
    for (double& x : mean) x /= static_cast<double>(group->size());
    return mean;
  }
  return std::nullopt;
}

Recommendation anticipate(const LpModel& model, const Schema& schema, const Graph& g, const TaskContext& ctx,
                          const std::string& relation, const AnticipateOptions& opts) {
  check_relation(relation);
  Recommendation rec;
  rec.target_relation = relation;
  rec.method = RecMethod::kLp;
  rec.context = ctx;

  const EmbeddingState* s = &model.state;
  EmbeddingState work;
  std::uint32_t task_id = 0;
  if (opts.task) {
    auto id = model.state.entities.find(*opts.task);
    if (!id) throw NoRecommendation("task " + *opts.task + " is not embedded");
    task_id = *id;
  } else {
    auto init = context_surrogate(model.state, g, ctx);
    if (!opts.fine_tune && !(opts.surrogate && init)) {
      const QueryTarget target = target_of(relation);
      return from_ladder(recommend_by_query(g, schema, ctx, target, opts.k), ctx, target);
    }
    const std::string task = "task/context-" + hex(fnv1a(context_to_json(ctx) + "|" + relation));
    work = model.state;
    if (opts.fine_tune) {
      FineTuneOptions tune = opts.tune;
      if (init) tune.init[task] = *init;
      fine_tune(work, model.train, context_facts(model, g, ctx, task, relation), tune);
      rec.fine_tuned = true;
    } else {
      std::mt19937_64 rng(opts.tune.seed);
      const auto id = add_entity(work, task, rng);
      std::copy(init->begin(), init->end(), work.entity.row(id));
    }
    task_id = *work.entities.find(task);
    s = &work;
  }
  auto rel = s->relations.find(relation);
  if (!rel) throw NoRecommendation("relation " + relation + " is not embedded");

  std::vector<std::pair<std::string, double>> scored;
  auto consider = [&](std::uint32_t e) { scored.emplace_back(s->entities.name(e), score(*s, Fact{task_id, *rel, e})); };
  if (opts.filter) {
    for (const auto& c : candidates_for(schema, g, ctx, relation)) {
      if (auto id = s->entities.find(c)) consider(*id);
    }
  } else {
    for (std::uint32_t e = 0; e < s->entities.size(); ++e) {
      if (e != task_id) consider(e);
    }
  }
  sort_items(scored);
  if (scored.size() > opts.k) scored.resize(opts.k);
  rec.items = std::move(scored);
  return rec;
}

Recommendation recommend(const Graph& g, const Schema& schema, const LpModel* model, const TaskContext& ctx,
                         QueryTarget target, RecMethod method, const AnticipateOptions& opts,
                         const TemplateSet& templates) {
  const std::string relation(target_relation(target));
  auto lp = [&]() {
    if (!model) throw NoRecommendation("no trained embeddings are loaded");
    return anticipate(*model, schema, g, ctx, relation, opts);
  };
  switch (method) {
    case RecMethod::kQuery:
      return from_ladder(recommend_by_query(g, schema, ctx, target, opts.k, templates), ctx, target);
    case RecMethod::kLp:
      return lp();
    case RecMethod::kAuto: {
      if (target != QueryTarget::kMetric || ctx.intent) {
        auto r = recommend_by_query(g, schema, ctx, target, opts.k, templates);
        if (!r.no_data()) return from_ladder(r, ctx, target);
      }
      if (!model) throw NoRecommendation("the query ladder has no data and no trained embeddings are loaded");
      return lp();
    }
  }
  return lp();
}

}  // namespace kgintent
