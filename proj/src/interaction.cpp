#include "kgintent/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "kgintent/lp_eval.hpp"
#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;
using nlohmann::json;

std::string Submission::to_json() const {
  json cs = json::array();
  for (const auto& c : constraints) {
    cs.push_back({{"algorithm", c.algorithm}, {"action", c.use ? "use" : "exclude"}, {"hard", c.hard}});
  }
  return json{{"user", user},       {"dataset", dataset},         {"intent", intent},
              {"metric", metric},   {"constraints", cs},          {"time_budget", time_budget}}
      .dump();
}

Submission Submission::from_json(const std::string& text) {
  Submission s;
  try {
    json j = json::parse(text);
    s.user = j.at("user").get<std::string>();
    s.dataset = j.at("dataset").get<std::string>();
    s.intent = j.at("intent").get<std::string>();
    s.metric = j.at("metric").get<std::string>();
    s.time_budget = j.value("time_budget", s.time_budget);
    for (const auto& c : j.value("constraints", json::array())) {
      ConstraintSpec spec;
      spec.algorithm = c.at("algorithm").get<std::string>();
      const std::string action = c.value("action", std::string("use"));
      if (action != "use" && action != "exclude") throw InvalidInteraction("constraint action must be use or exclude");
      spec.use = action == "use";
      spec.hard = c.value("hard", true);
      s.constraints.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw InvalidInteraction(std::string("bad submission: ") + e.what());
  }
  return s;
}

void check_submission(const Schema& schema, const Graph& g, const Submission& sub) {
  if (sub.user.empty() || sub.dataset.empty() || sub.intent.empty() || sub.metric.empty()) {
    throw InvalidInteraction("user, dataset, intent and metric are required");
  }
  if (!(sub.time_budget > 0)) throw InvalidInteraction("time_budget must be > 0");
  if (!g.contains({Term::iri(sub.dataset), iri_term(v::kType), iri_term(v::kDataset)})) {
    throw InvalidInteraction("unknown dataset " + sub.dataset);
  }
  const IntentNode* intent = schema.find_node(sub.intent);
  if (!intent || (intent->level != IntentLevel::kIntent && intent->level != IntentLevel::kMLTask)) {
    throw InvalidInteraction("unknown intent " + sub.intent);
  }
  if (!schema.find_metric(sub.metric)) throw InvalidInteraction("unknown metric " + sub.metric);
  if (!schema.metrics_for(sub.intent).count(sub.metric)) {
    throw InvalidInteraction("metric " + sub.metric + " does not suit intent " + sub.intent);
  }
  std::set<std::string> used, excluded;
  const auto serving = schema.algorithms_for(sub.intent);
  for (const auto& c : sub.constraints) {
    const IntentNode* n = schema.find_node(c.algorithm);
    if (!n || n->level != IntentLevel::kAlgorithm) throw InvalidInteraction("unknown algorithm " + c.algorithm);
    if (c.use && !serving.count(c.algorithm)) {
      throw InvalidInteraction("algorithm " + c.algorithm + " does not serve intent " + sub.intent);
    }
    (c.use ? used : excluded).insert(c.algorithm);
  }
  for (const auto& a : used) {
    if (excluded.count(a)) throw ContradictoryConstraints("algorithm " + a + " is both required and excluded");
  }
}

namespace {

// Adds triples in order, validating each against the graph as it grows.
// Type triples go first so domain and range checks can see them.
std::vector<Triple> add_atomically(Graph& g, const Schema& schema, std::vector<Triple> triples) {
  const Term type = iri_term(v::kType);
  std::stable_partition(triples.begin(), triples.end(), [&](const Triple& t) { return t.relation == type; });
  std::vector<Triple> added;
  auto rollback = [&] {
    for (const auto& t : added) g.remove(t);
  };
  for (const auto& t : triples) {
    if (g.contains(t)) continue;
    if (auto violation = validate(schema, g, t)) {
      rollback();
      throw InvalidInteraction(to_string(t) + ": " + violation->message);
    }
    g.add(t);
    added.push_back(t);
  }
  return added;
}

class TripleList {
 public:
  void link(const std::string& s, std::string_view r, const std::string& o) {
    out.push_back({Term::iri(s), iri_term(r), Term::iri(o)});
  }
  void add(const std::string& s, std::string_view r, Term o) { out.push_back({Term::iri(s), iri_term(r), std::move(o)}); }
  std::vector<Triple> out;
};

void feedback_triples(TripleList& b, const std::string& id, const Feedback& fb) {
  if (fb.score < 1 || fb.score > 5) throw InvalidInteraction("feedback score must lie in 1..5");
  const std::string node = "feedback/" + id;
  b.link(node, v::kType, std::string(v::kFeedback));
  b.add(node, v::kFeedbackScore, Term::integer(fb.score));
  for (const auto& tag : fb.tags) b.add(node, v::kFeedbackTag, Term::string(tag));
  b.link("workflow/" + id, v::kHasFeedback, node);
}

}  // namespace

std::vector<Triple> annotate_interaction(Graph& g, const Schema& schema, const InteractionRecord& rec) {
  const Submission& sub = rec.submission;
  if (rec.id.empty()) throw InvalidInteraction("interaction id is empty");
  check_submission(schema, g, sub);
  if (rec.workflow.empty()) throw InvalidInteraction("workflow has no steps");
  if (rec.evaluation.metric != sub.metric) throw InvalidInteraction("evaluation metric differs from the requested one");
  if (!std::isfinite(rec.evaluation.value)) throw InvalidInteraction("evaluation value is not finite");
  std::set<std::string> distinct(rec.workflow.begin(), rec.workflow.end());
  if (distinct.size() != rec.workflow.size()) throw InvalidInteraction("workflow repeats an algorithm");
  for (const auto& c : sub.constraints) {
    const bool present = distinct.count(c.algorithm) > 0;
    if (c.hard && c.use != present) {
      throw InvalidInteraction("workflow violates the hard constraint on " + c.algorithm);
    }
  }

  const std::string& id = rec.id;
  const std::string task = "task/" + id;
  TripleList b;
  b.link(sub.user, v::kType, std::string(v::kUser));
  b.link(task, v::kType, std::string(v::kTask));
  b.link(task, v::kRequestedBy, sub.user);
  b.link(task, v::kUsesDataset, sub.dataset);
  b.link(task, v::kHasIntent, sub.intent);
  b.link(task, v::kHasRequirement, sub.metric);
  for (std::size_t i = 0; i < sub.constraints.size(); ++i) {
    const auto& c = sub.constraints[i];
    const std::string node = "constraint/" + id + "-" + std::to_string(i + 1);
    b.link(node, v::kType, std::string(v::kAlgorithmConstraint));
    b.add(node, v::kIsHard, Term::boolean(c.hard));
    b.link(node, v::kOnAlgorithm, c.algorithm);
    b.add(node, v::kConstraintAction, Term::string(c.use ? "use" : "exclude"));
    b.link(task, v::kHasConstraint, node);
  }
  const std::string wf = "workflow/" + id;
  b.link(wf, v::kType, std::string(v::kWorkflow));
  b.link(task, v::kAchievedBy, wf);
  for (std::size_t i = 0; i < rec.workflow.size(); ++i) {
    const std::string step = "step/" + id + "-" + std::to_string(i + 1);
    b.link(step, v::kType, std::string(v::kStep));
    b.link(step, v::kUsesAlgorithm, rec.workflow[i]);
    b.link(wf, v::kHasStep, step);
    if (i) b.link("step/" + id + "-" + std::to_string(i), v::kFollowedBy, step);
  }
  const std::string ev = "evaluation/" + id;
  b.link(ev, v::kType, std::string(v::kModelEvaluation));
  b.link(ev, v::kEvaluatesMetric, rec.evaluation.metric);
  b.add(ev, v::kScoreValue, Term::real(rec.evaluation.value));
  b.link(wf, v::kHasEvaluation, ev);
  if (rec.feedback) feedback_triples(b, id, *rec.feedback);
  return add_atomically(g, schema, std::move(b.out));
}

std::vector<Triple> annotate_feedback(Graph& g, const Schema& schema, const std::string& id, const Feedback& fb) {
  if (!g.contains({Term::iri("workflow/" + id), iri_term(v::kType), iri_term(v::kWorkflow)})) {
    throw InvalidInteraction("no workflow for task " + id);
  }
  TripleList b;
  feedback_triples(b, id, fb);
  return add_atomically(g, schema, std::move(b.out));
}

ExecutionResult stub_execute(const Schema& schema, const Submission& sub, std::uint64_t seed) {
  std::set<std::string> used, excluded;
  for (const auto& c : sub.constraints) (c.use ? used : excluded).insert(c.algorithm);
  for (const auto& a : used) {
    if (excluded.count(a)) throw ContradictoryConstraints("algorithm " + a + " is both required and excluded");
  }
  std::vector<std::string> predictors, preprocessors;
  for (const auto& a : schema.algorithms_for(sub.intent)) {
    if (excluded.count(a)) continue;
    (schema.is_preprocessor(a) ? preprocessors : predictors).push_back(a);
  }
  std::mt19937_64 rng(seed ^ fnv1a(sub.to_json()));
  auto pick = [&](const std::vector<std::string>& xs) { return xs[rng() % xs.size()]; };

  ExecutionResult out;
  for (const auto& a : preprocessors) {
    if (used.count(a)) out.workflow.push_back(a);
  }
  std::vector<std::string> free_pre;
  for (const auto& a : preprocessors) {
    if (!used.count(a)) free_pre.push_back(a);
  }
  if (!free_pre.empty() && rng() % 2 == 0) out.workflow.push_back(pick(free_pre));
  std::vector<std::string> chosen;
  for (const auto& a : predictors) {
    if (used.count(a)) chosen.push_back(a);
  }
  if (chosen.empty()) {
    if (predictors.empty()) throw ContradictoryConstraints("the constraints exclude every predictor for " + sub.intent);
    chosen.push_back(pick(predictors));
  }
  out.workflow.insert(out.workflow.end(), chosen.begin(), chosen.end());

  const Metric* m = schema.find_metric(sub.metric);
  if (!m) throw InvalidInteraction("unknown metric " + sub.metric);
  const double quality = 0.5 + 0.45 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double value = m->higher_is_better ? m->lo + quality * (m->hi - m->lo) : m->hi - quality * (m->hi - m->lo);
  out.evaluation = {sub.metric, std::round(value * 1e4) / 1e4};
  return out;
}

}  // namespace kgintent
