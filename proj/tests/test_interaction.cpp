#include <doctest.h>

#include <algorithm>

#include "kgintent/interaction.hpp"
#include "kgintent/profiler.hpp"
#include "kgintent/vocab.hpp"

using namespace kgintent;
namespace v = vocab;

namespace {

const std::string kData = TEST_DATA_DIR;

Graph base_graph() {
  const Schema& schema = Schema::data_analytics();
  Graph g = schema.to_graph();
  annotate(g, profile(kData + "/iris.csv", "class"), schema);
  return g;
}

Submission example() {
  Submission s;
  s.user = "user/alice";
  s.dataset = "dataset/iris";
  s.intent = "Classification";
  s.metric = "Accuracy";
  s.constraints = {{"SVC", true, true}, {"StandardScaler", true, false}};
  return s;
}

std::size_t count(const Graph& g, std::string_view rel) {
  return g.find(std::nullopt, iri_term(rel), std::nullopt).size();
}

}  // namespace

TEST_CASE("an annotated interaction adds the expected edges") {
  const Schema& schema = Schema::data_analytics();
  Graph g = base_graph();
  InteractionRecord rec{"t1", example(), {"StandardScaler", "SVC"}, {"Accuracy", 0.93}, Feedback{4, {"fast"}}};
  auto added = annotate_interaction(g, schema, rec);
  CHECK(!added.empty());
  CHECK(count(g, v::kHasIntent) == 1);
  CHECK(count(g, v::kHasRequirement) == 1);
  CHECK(count(g, v::kHasConstraint) == 2);
  CHECK(count(g, v::kFollowedBy) == 1);
  CHECK(count(g, v::kHasStep) == 2);
  CHECK(g.contains({Term::iri("step/t1-1"), iri_term(v::kFollowedBy), Term::iri("step/t1-2")}));
  CHECK(g.contains({Term::iri("constraint/t1-2"), iri_term(v::kIsHard), Term::boolean(false)}));
  CHECK(g.contains({Term::iri("constraint/t1-1"), iri_term(v::kIsHard), Term::boolean(true)}));
  CHECK(g.contains({Term::iri("workflow/t1"), iri_term(v::kHasFeedback), Term::iri("feedback/t1")}));
  for (const auto& t : added) CHECK_FALSE(validate(schema, g, t).has_value());

  SUBCASE("re-annotation is idempotent") {
    const std::size_t before = g.size();
    CHECK(annotate_interaction(g, schema, rec).empty());
    CHECK(g.size() == before);
  }
}

TEST_CASE("a three step workflow chains two followedBy edges") {
  const Schema& schema = Schema::data_analytics();
  Graph g = base_graph();
  Submission s = example();
  s.constraints.clear();
  InteractionRecord rec{"t2", s, {"StandardScaler", "MinMaxScaler", "SVC"}, {"Accuracy", 0.9}, std::nullopt};
  annotate_interaction(g, schema, rec);
  CHECK(count(g, v::kFollowedBy) == 2);
}

TEST_CASE("invalid interactions leave the graph untouched") {
  const Schema& schema = Schema::data_analytics();
  const Graph g0 = base_graph();
  Graph g = g0;
  InteractionRecord ok{"t3", example(), {"StandardScaler", "SVC"}, {"Accuracy", 0.9}, std::nullopt};

  auto bad = ok;
  bad.submission.metric = "MSE";  // not a classification metric
  bad.evaluation.metric = "MSE";
  CHECK_THROWS_AS(annotate_interaction(g, schema, bad), InvalidInteraction);
  CHECK(g == g0);

  bad = ok;
  bad.workflow = {"StandardScaler", "LogisticRegression"};  // misses the hard SVC constraint
  CHECK_THROWS_AS(annotate_interaction(g, schema, bad), InvalidInteraction);
  CHECK(g == g0);

  bad = ok;
  bad.workflow = {"StandardScaler", "NotAnAlgorithm"};  // fails range validation late in the batch
  bad.submission.constraints = {};
  CHECK_THROWS_AS(annotate_interaction(g, schema, bad), InvalidInteraction);
  CHECK(g == g0);

  bad = ok;
  bad.feedback = Feedback{9, {}};
  CHECK_THROWS_AS(annotate_interaction(g, schema, bad), InvalidInteraction);
  CHECK(g == g0);

  bad = ok;
  bad.submission.dataset = "dataset/missing";
  CHECK_THROWS_AS(annotate_interaction(g, schema, bad), InvalidInteraction);
  CHECK(g == g0);

  CHECK_THROWS_AS(annotate_feedback(g, schema, "t3", Feedback{3, {}}), InvalidInteraction);
  annotate_interaction(g, schema, ok);
  CHECK(annotate_feedback(g, schema, "t3", Feedback{3, {"slow"}}).size() == 4);
}

TEST_CASE("contradictory constraints are rejected") {
  const Schema& schema = Schema::data_analytics();
  Graph g = base_graph();
  Submission s = example();
  s.constraints.push_back({"SVC", false, true});
  CHECK_THROWS_AS(check_submission(schema, g, s), ContradictoryConstraints);
  CHECK_THROWS_AS(stub_execute(schema, s, 1), ContradictoryConstraints);

  Submission all_out = example();
  all_out.constraints.clear();
  for (const auto& a : schema.algorithms_for("Classification")) {
    if (!schema.is_preprocessor(a)) all_out.constraints.push_back({a, false, true});
  }
  CHECK_THROWS_AS(stub_execute(schema, all_out, 1), ContradictoryConstraints);
}

TEST_CASE("the stub executor is deterministic and honours constraints") {
  const Schema& schema = Schema::data_analytics();
  Submission s = example();
  s.constraints.push_back({"NoPreprocessing", false, true});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = stub_execute(schema, s, seed);
    auto b = stub_execute(schema, s, seed);
    CHECK(a.workflow == b.workflow);
    CHECK(a.evaluation.value == b.evaluation.value);
    CHECK(std::count(a.workflow.begin(), a.workflow.end(), "SVC") == 1);
    CHECK(std::count(a.workflow.begin(), a.workflow.end(), "NoPreprocessing") == 0);
    CHECK(a.workflow.back() == "SVC");
    CHECK(a.evaluation.metric == "Accuracy");
    CHECK(a.evaluation.value >= 0.0);
    CHECK(a.evaluation.value <= 1.0);
  }
  Submission reg = example();
  reg.intent = "Regression";
  reg.metric = "MSE";
  reg.constraints.clear();
  auto r = stub_execute(schema, reg, 3);
  CHECK(schema.algorithms_for("Regression").count(r.workflow.back()) == 1);
}

TEST_CASE("submission json round trip") {
  Submission s = example();
  s.constraints.push_back({"GaussianNB", false, true});
  auto back = Submission::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK_FALSE(back.constraints[1].hard);
  CHECK_FALSE(back.constraints[2].use);
  CHECK_THROWS_AS(Submission::from_json("{}"), InvalidInteraction);
  CHECK_THROWS_AS(Submission::from_json(R"({"user":"u","dataset":"d","intent":"i","metric":"m",
      "constraints":[{"algorithm":"SVC","action":"maybe"}]})"),
                  InvalidInteraction);
}
