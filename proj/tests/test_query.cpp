#include <doctest.h>

#include "fixtures.hpp"
#include "kgintent/query.hpp"
#include "kgintent/synth.hpp"

using namespace kgintent;

namespace {

TaskContext u1_on_d1() {
  TaskContext ctx;
  ctx.user = "user/u1";
  ctx.dataset = "dataset/D1";
  ctx.intent = "Classification";
  return ctx;
}

}  // namespace

TEST_CASE("ladder advances one level per deletion stage") {
  const Schema& schema = Schema::data_analytics();
  Graph g = fixtures::ladder_graph();
  const auto ctx = u1_on_d1();
  int previous = 1;
  for (const auto& stage : fixtures::ladder_stages()) {
    for (const auto& t : stage.delete_tasks) fixtures::delete_task(g, t);
    auto r = recommend_by_query(g, schema, ctx, QueryTarget::kMetric, 3);
    CHECK(r.level_used == stage.level);
    if (stage.level == 0) {
      CHECK(r.no_data());
      CHECK(r.items.empty());
      continue;
    }
    CHECK(r.level_used >= previous);
    previous = r.level_used;
    REQUIRE_FALSE(r.items.empty());
    CHECK(r.items[0].first == stage.top);
    CHECK(r.items[0].second == stage.count);
  }
}

TEST_CASE("level one lists every metric of the user on the dataset") {
  Graph g = fixtures::ladder_graph();
  auto r = recommend_by_query(g, Schema::data_analytics(), u1_on_d1(), QueryTarget::kMetric, 3);
  CHECK(r.template_id == "L1_user_dataset");
  REQUIRE(r.items.size() == 1);
  CHECK(r.items[0] == std::pair<std::string, std::size_t>{"Accuracy", 2});
}

TEST_CASE("open intent widens the metric population only when allowed") {
  Graph g = fixtures::ladder_graph();
  TaskContext ctx = u1_on_d1();
  ctx.intent.reset();
  CHECK_THROWS_AS(recommend_by_query(g, Schema::data_analytics(), ctx, QueryTarget::kMetric), std::invalid_argument);
  auto r = recommend_by_query(g, Schema::data_analytics(), ctx, QueryTarget::kIntent, 3);
  CHECK(r.level_used == 1);
  CHECK(r.items[0] == std::pair<std::string, std::size_t>{"Classification", 2});
}

TEST_CASE("expertise filter restricts every level") {
  Graph g = fixtures::ladder_graph();
  TaskContext ctx = u1_on_d1();
  ctx.filters["expertise"] = "novice";
  auto r = recommend_by_query(g, Schema::data_analytics(), ctx, QueryTarget::kMetric, 3);
  CHECK(r.level_used == 3);
  CHECK(r.items[0] == std::pair<std::string, std::size_t>{"Precision", 2});
  ctx.filters["expertise"] = "expert";
  CHECK(recommend_by_query(g, Schema::data_analytics(), ctx, QueryTarget::kMetric, 3).level_used == 1);
  ctx.filters = {{"colour", "red"}};
  CHECK_THROWS_AS(recommend_by_query(g, Schema::data_analytics(), ctx, QueryTarget::kMetric), std::invalid_argument);
}

TEST_CASE("dataset size filter uses instance counts") {
  Graph g = fixtures::ladder_graph();
  g.add({Term::iri("dataset/D1"), iri_term(vocab::kNumInstances), Term::integer(150)});
  g.add({Term::iri("dataset/D2"), iri_term(vocab::kNumInstances), Term::integer(5000)});
  g.add({Term::iri("dataset/D3"), iri_term(vocab::kNumInstances), Term::integer(90000)});
  TaskContext ctx = u1_on_d1();
  ctx.dataset.reset();
  ctx.filters["min_instances"] = "1000";
  ctx.filters["max_instances"] = "10000";
  auto r = recommend_by_query(g, Schema::data_analytics(), ctx, QueryTarget::kMetric, 3);
  CHECK(r.level_used == 2);
  CHECK(r.items[0] == std::pair<std::string, std::size_t>{"F1-Score", 3});
}

TEST_CASE("empty store has no data") {
  auto r = recommend_by_query(Graph{}, Schema::data_analytics(), u1_on_d1(), QueryTarget::kMetric, 3);
  CHECK(r.no_data());
}

TEST_CASE("templates round-trip through json") {
  auto t = TemplateSet::defaults();
  REQUIRE(t.templates().size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(t.templates()[static_cast<std::size_t>(i)].level == i + 1);
  auto back = TemplateSet::from_json(t.to_json());
  CHECK(back.to_json() == t.to_json());
  CHECK_THROWS(TemplateSet::from_json("{}"));
  CHECK_THROWS(TemplateSet::from_json(R"({"x": {"level": 1, "atoms": [["?task", "hasIntent"]]}})"));
}

TEST_CASE("constraint recommendations count algorithms on the synthetic corpus") {
  const Schema& schema = Schema::data_analytics();
  SynthConfig cfg;
  Graph g = synthesize(schema, cfg);
  TaskContext ctx;
  ctx.user = "user/u01";
  ctx.intent = "Classification";
  auto r = recommend_by_query(g, schema, ctx, QueryTarget::kConstraint, 5);
  REQUIRE_FALSE(r.no_data());
  CHECK(r.level_used == 2);
  const auto allowed = schema.algorithms_for("Classification");
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    CHECK(allowed.count(r.items[i].first) == 1);
    if (i) CHECK(r.items[i - 1].second >= r.items[i].second);
  }
  CHECK(recommend_by_query(g, schema, ctx, QueryTarget::kConstraint, 5).items == r.items);

  ctx.dataset = "dataset/synth_cat_001";
  auto m = recommend_by_query(g, schema, ctx, QueryTarget::kMetric, 3);
  for (const auto& [metric, n] : m.items) CHECK(schema.find_metric(metric) != nullptr);
}
