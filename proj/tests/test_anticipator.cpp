#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "kgintent/anticipator.hpp"
#include "kgintent/lp_eval.hpp"
#include "kgintent/profiler.hpp"
#include "kgintent/synth.hpp"
#include "kgintent/vocab.hpp"

using namespace kgintent;
namespace v = vocab;

namespace {

const std::string kData = TEST_DATA_DIR;

struct Trained {
  Graph g;
  LpModel model;
};

// TransH on the default synthetic corpus, trained once for the whole file.
const Trained& trained() {
  static const Trained t = [] {
    const Schema& schema = Schema::data_analytics();
    Trained out;
    out.g = synthesize_full(schema, SynthConfig{});
    auto data = prepare_lp_data(out.g, schema, {});
    ModelConfig cfg;
    cfg.model = ModelKind::kTransH;
    cfg.dim = 42;
    cfg.lr = 0.0012;
    cfg.npp = 20;
    cfg.max_epochs = 60;
    auto [state, hist] = train(data.view.entities, data.view.relations, data.split.train, data.split.valid, cfg, {});
    out.model = LpModel::from_graph(std::move(state), data.view.encoder, out.g);
    return out;
  }();
  return t;
}

bool has(const std::set<std::string>& s, const std::string& x) { return s.count(x) == 1; }

}  // namespace

TEST_CASE("candidate pools follow the schema and the fixed intent") {
  const Schema& schema = Schema::data_analytics();
  const Graph& g = trained().g;
  TaskContext ctx;
  ctx.user = "user/u01";
  auto intents = candidates_for(schema, g, ctx, std::string(v::kHasIntent));
  for (const char* i : {"Classification", "Regression", "Clustering", "Predict"}) CHECK(has(intents, i));
  for (const auto& i : intents) {
    const IntentNode* n = schema.find_node(i);
    REQUIRE(n);
    CHECK((n->level == IntentLevel::kIntent || n->level == IntentLevel::kMLTask));
  }
  ctx.intent = "Classification";
  auto algs = candidates_for(schema, g, ctx, std::string(v::kHasConstraint));
  CHECK_FALSE(has(algs, "SVR"));
  CHECK(has(algs, "SVC"));
  ctx.intent = "Regression";
  auto metrics = candidates_for(schema, g, ctx, std::string(v::kHasRequirement));
  CHECK_FALSE(has(metrics, "F1-Score"));
  CHECK(has(metrics, "MSE"));
  auto datasets = candidates_for(schema, g, ctx, std::string(v::kUsesDataset));
  CHECK(datasets.size() == 96);
  try {
    candidates_for(schema, g, ctx, "achievedBy");
    FAIL("expected UnsupportedRelation");
  } catch (const UnsupportedRelation& e) {
    CHECK(std::string(e.what()).find("hasRequirement") != std::string::npos);
  }
}

TEST_CASE("anticipated items are filtered, sorted and deterministic") {
  const Schema& schema = Schema::data_analytics();
  const auto& t = trained();
  TaskContext ctx;
  ctx.user = "user/u03";
  ctx.dataset = "dataset/synth_cat_010";
  ctx.intent = "Classification";
  for (const auto& rel : supported_relations()) {
    if (rel == v::kHasIntent) continue;
    AnticipateOptions opts;
    opts.k = 5;
    auto r = anticipate(t.model, schema, t.g, ctx, rel, opts);
    CHECK(r.method == RecMethod::kLp);
    CHECK(r.fine_tuned);
    CHECK(r.items.size() == 5);
    const auto pool = candidates_for(schema, t.g, ctx, rel);
    for (std::size_t i = 0; i < r.items.size(); ++i) {
      CHECK(has(pool, r.items[i].first));
      if (i) {
        CHECK(r.items[i - 1].second >= r.items[i].second);
        if (r.items[i - 1].second == r.items[i].second) CHECK(r.items[i - 1].first < r.items[i].first);
      }
    }
    auto again = anticipate(t.model, schema, t.g, ctx, rel, opts);
    CHECK(again.items == r.items);
  }
  AnticipateOptions big;
  big.k = 1000;
  auto all = anticipate(t.model, schema, t.g, ctx, std::string(v::kHasRequirement), big);
  CHECK(all.items.size() == schema.metrics_for("Classification").size());
}

TEST_CASE("unfiltered ranking may leave the candidate pool") {
  const Schema& schema = Schema::data_analytics();
  const auto& t = trained();
  TaskContext ctx;
  ctx.user = "user/u02";
  ctx.dataset = "dataset/synth_num_003";
  AnticipateOptions opts;
  opts.filter = false;
  opts.k = 50;
  auto r = anticipate(t.model, schema, t.g, ctx, std::string(v::kHasIntent), opts);
  CHECK(r.items.size() == 50);
}

TEST_CASE("cold paths: surrogate scoring and the query fallback") {
  const Schema& schema = Schema::data_analytics();
  const auto& t = trained();
  TaskContext ctx;
  ctx.user = "user/u01";
  ctx.dataset = "dataset/synth_cat_002";
  AnticipateOptions surrogate;
  surrogate.fine_tune = false;
  auto s = anticipate(t.model, schema, t.g, ctx, std::string(v::kHasIntent), surrogate);
  CHECK(s.method == RecMethod::kLp);
  CHECK_FALSE(s.fine_tuned);
  CHECK(s.items.size() == 3);

  AnticipateOptions none = surrogate;
  none.surrogate = false;
  auto q = anticipate(t.model, schema, t.g, ctx, std::string(v::kHasIntent), none);
  CHECK(q.method == RecMethod::kQuery);
  CHECK(q.level_used >= 1);

  CHECK(context_surrogate(t.model.state, t.g, ctx).has_value());
  AnticipateOptions embedded;
  embedded.task = "task/00001";
  auto e = anticipate(t.model, schema, t.g, ctx, std::string(v::kHasIntent), embedded);
  CHECK_FALSE(e.fine_tuned);
  embedded.task = "task/none";
  CHECK_THROWS_AS(anticipate(t.model, schema, t.g, ctx, std::string(v::kHasIntent), embedded), NoRecommendation);
}

TEST_CASE("categorical datasets get Classification first") {
  const Schema& schema = Schema::data_analytics();
  const auto& t = trained();
  Graph g = t.g;
  for (const char* file : {"iris.csv", "wine.csv", "breast_cancer.csv"}) {
    Term d = annotate(g, profile(kData + "/" + file, "class"));
    TaskContext ctx;
    ctx.user = "user/u05";
    ctx.dataset = d.value();
    auto r = anticipate(t.model, schema, g, ctx, std::string(v::kHasIntent));
    REQUIRE(r.items.size() == 3);
    CHECK(r.items[0].first == "Classification");
    for (const auto& [e, score] : r.items) CHECK(schema.find_node(e) != nullptr);
  }
}

TEST_CASE("recommend dispatches between the ladder and embeddings") {
  const Schema& schema = Schema::data_analytics();
  const auto& t = trained();
  TaskContext known;
  known.user = "user/u01";
  known.intent = "Classification";
  auto q = recommend(t.g, schema, &t.model, known, QueryTarget::kMetric, RecMethod::kQuery);
  auto ladder = recommend_by_query(t.g, schema, known, QueryTarget::kMetric, 3);
  REQUIRE(q.items.size() == ladder.items.size());
  for (std::size_t i = 0; i < q.items.size(); ++i) CHECK(q.items[i].first == ladder.items[i].first);
  CHECK(q.level_used == ladder.level_used);

  auto a = recommend(t.g, schema, &t.model, known, QueryTarget::kMetric, RecMethod::kAuto);
  CHECK(a.method == RecMethod::kQuery);

  Graph empty_history = Schema::data_analytics().to_graph();
  TaskContext fresh;
  fresh.user = "user/u01";
  auto lp = recommend(empty_history, schema, &t.model, fresh, QueryTarget::kIntent, RecMethod::kAuto);
  CHECK(lp.method == RecMethod::kLp);
  CHECK(lp.items.size() == 3);
  CHECK_THROWS_AS(recommend(empty_history, schema, nullptr, fresh, QueryTarget::kIntent, RecMethod::kAuto),
                  NoRecommendation);
  CHECK_THROWS_AS(recommend(t.g, schema, nullptr, fresh, QueryTarget::kIntent, RecMethod::kLp), NoRecommendation);
}

TEST_CASE("model checkpoints keep the literal encoding") {
  const auto& t = trained();
  auto path = std::filesystem::temp_directory_path() / "kgintent_model_test.ckpt";
  t.model.save(path);
  auto back = LpModel::load(path, t.g);
  CHECK(back.state == t.model.state);
  CHECK(back.encoder.cuts() == t.model.encoder.cuts());
  CHECK(back.train.size() == t.model.train.size());
  std::filesystem::remove(path);
}

TEST_CASE("context json round trip and validation") {
  TaskContext ctx;
  ctx.user = "user/u01";
  ctx.dataset = "dataset/iris";
  ctx.constraints = {"SVC"};
  ctx.filters["expertise"] = "novice";
  auto back = context_from_json(context_to_json(ctx));
  CHECK(back.user == ctx.user);
  CHECK(back.dataset == ctx.dataset);
  CHECK_FALSE(back.intent.has_value());
  CHECK(back.constraints == ctx.constraints);
  CHECK(back.filters == ctx.filters);
  CHECK_THROWS_AS(context_from_json("{}"), std::invalid_argument);
  CHECK_THROWS_AS(context_from_json("[1]"), std::invalid_argument);
  CHECK_THROWS_AS(context_from_json(R"({"user": 3})"), std::invalid_argument);
}
