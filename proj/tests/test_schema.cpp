#include <doctest.h>

#include "kgintent/pattern.hpp"
#include "kgintent/schema.hpp"
#include "kgintent/vocab.hpp"

using namespace kgintent;

namespace {

Triple tri(const std::string& s, const std::string& r, const std::string& o) {
  return {Term::iri(s), Term::iri(r), Term::iri(o)};
}

const std::size_t kSchemaTriples = 392;

}  // namespace

TEST_CASE("bootstrap emits the intent roots and ML tasks") {
  const Schema& s = Schema::data_analytics();
  auto roots = s.nodes_at(IntentLevel::kIntent);
  CHECK(roots == std::set<std::string>{"Assess", "Describe", "Explain", "Predict", "Suggest"});
  auto tasks = s.nodes_at(IntentLevel::kMLTask);
  for (const char* t : {"Classification", "Regression", "Forecasting", "Clustering", "Summarize",
                        "Analyze", "Validate", "Compare"}) {
    CHECK(tasks.count(t) == 1);
  }
  CHECK(s.find_node("Classification")->parents == std::vector<std::string>{"Predict"});
}

TEST_CASE("curated algorithm and metric inventory") {
  const Schema& s = Schema::data_analytics();
  auto algs = s.nodes_at(IntentLevel::kAlgorithm);
  CHECK(algs.size() >= 15);
  for (const char* a : {"SVC", "KNeighborsClassifier", "LogisticRegression", "RandomForest", "SVR",
                        "SGDRegressor", "KNeighborsRegressor", "Normalizer", "MLPRegressor",
                        "RandomForestRegressor", "NoPreprocessing"}) {
    CHECK_MESSAGE(algs.count(a) == 1, a);
  }
  for (const char* m : {"F1-Score", "Accuracy", "AUC", "Precision", "R2", "MSE", "RMSE"}) {
    CHECK_MESSAGE(s.find_metric(m) != nullptr, m);
  }
}

TEST_CASE("schema triple count is frozen") {
  const Schema& s = Schema::data_analytics();
  std::size_t expected = 0;
  for (const auto& c : s.classes()) expected += 1 + (c.superclass ? 1 : 0);
  for (const auto& p : s.properties()) expected += 3 + (p.functional ? 1 : 0);
  for (const auto& n : s.intent_nodes()) expected += 1 + n.parents.size();
  for (const auto& m : s.metrics()) expected += 1 + m.suitable_for.size();
  expected += 14 * 2 + 6;  // hyperparameters (type + link) and trait literals
  Graph g = bootstrap_schema();
  CHECK(g.size() == expected);
  CHECK(g.size() == kSchemaTriples);
}

TEST_CASE("hierarchy closures") {
  const Schema& s = Schema::data_analytics();
  auto cls = s.algorithms_for("Classification");
  for (const char* a : {"SVC", "LogisticRegression", "RandomForest"}) CHECK(cls.count(a) == 1);
  CHECK(cls.count("SVR") == 0);
  CHECK(s.algorithms_for("Predict").count("SVC") == 1);
  CHECK(s.intents_for("SVR") == std::set<std::string>{"Predict"});
  CHECK(s.algorithms_for("NoSuchNode").empty());
  CHECK(s.algorithms_for("Forecasting").empty());

  Graph g = bootstrap_schema();
  Pattern p{{{iri("SVC"), iri("addressesTask"), var("t")}, {var("t"), iri("subIntentOf"), iri("Predict")}}};
  CHECK(match(g, p).size() == 1);
}

TEST_CASE("hierarchy level invariants") {
  const Schema& s = Schema::data_analytics();
  for (const auto& n : s.intent_nodes()) {
    switch (n.level) {
      case IntentLevel::kIntent: CHECK(n.parents.empty()); break;
      case IntentLevel::kMLTask: CHECK(n.parents.size() == 1); break;
      case IntentLevel::kAlgorithm:
        CHECK_MESSAGE(!n.parents.empty(), n.iri);
        CHECK_MESSAGE(!s.intents_for(n.iri).empty(), n.iri);
        break;
      case IntentLevel::kImplementation: CHECK(n.parents.size() >= 1); break;
    }
    for (const auto& p : n.parents) {
      const IntentNode* parent = s.find_node(p);
      REQUIRE(parent);
      CHECK(static_cast<int>(parent->level) + 1 == static_cast<int>(n.level));
    }
  }
  CHECK_NOTHROW(s.topological_classes());
  auto order = s.topological_classes();
  auto pos = [&](const std::string& c) { return std::find(order.begin(), order.end(), c) - order.begin(); };
  CHECK(pos("Algorithm") < pos("TreeAlgorithm"));
  CHECK(pos("TreeAlgorithm") < pos("TreeEnsembleAlgorithm"));
}

TEST_CASE("every bootstrapped triple validates") {
  Graph g = bootstrap_schema();
  auto bad = validate_all(Schema::data_analytics(), g);
  for (const auto& [t, v] : bad) FAIL_CHECK(to_string(t) << " -> " << v.message);
  CHECK(bad.empty());
}

TEST_CASE("validate reports the failed constraint") {
  const Schema& s = Schema::data_analytics();
  Graph g = bootstrap_schema();
  g.add(tri("task1", "rdf:type", "Task"));
  g.add(tri("Iris", "rdf:type", "Dataset"));
  g.add(tri("u1", "rdf:type", "User"));
  g.add(tri("u2", "rdf:type", "User"));

  CHECK_FALSE(validate(s, g, tri("task1", "hasIntent", "Classification")));
  CHECK_FALSE(validate(s, g, tri("task1", "hasIntent", "Predict")));

  auto range = validate(s, g, tri("task1", "hasIntent", "Iris"));
  REQUIRE(range);
  CHECK(range->kind == ViolationKind::kRangeMismatch);

  auto unknown = validate(s, g, tri("task1", "likes", "Iris"));
  REQUIRE(unknown);
  CHECK(unknown->kind == ViolationKind::kUnknownRelation);

  auto domain = validate(s, g, tri("Iris", "hasIntent", "Classification"));
  REQUIRE(domain);
  CHECK(domain->kind == ViolationKind::kDomainMismatch);

  g.add(tri("task1", "requestedBy", "u1"));
  CHECK_FALSE(validate(s, g, tri("task1", "requestedBy", "u1")));
  auto dup = validate(s, g, tri("task1", "requestedBy", "u2"));
  REQUIRE(dup);
  CHECK(dup->kind == ViolationKind::kFunctionalDuplicate);

  auto lit = validate(s, g, {Term::iri("Iris"), Term::iri("numInstances"), Term::string("many")});
  REQUIRE(lit);
  CHECK(lit->kind == ViolationKind::kRangeMismatch);
  CHECK_FALSE(validate(s, g, {Term::iri("Iris"), Term::iri("numInstances"), Term::integer(150)}));

  auto cls = validate(s, g, tri("x", "rdf:type", "NotAClass"));
  REQUIRE(cls);
  CHECK(cls->kind == ViolationKind::kUnknownClass);
}
