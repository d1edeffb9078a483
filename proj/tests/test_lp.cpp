#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "kgintent/lp_eval.hpp"
#include "kgintent/schema.hpp"
#include "kgintent/synth.hpp"
#include "kgintent/vocab.hpp"

using namespace kgintent;
namespace v = vocab;

namespace {

void add(Graph& g, const std::string& s, std::string_view r, Term o) {
  g.add({Term::iri(s), iri_term(r), std::move(o)});
}

// Four entities on a line (second coordinate zero) and one relation translating by +1.
EmbeddingState line_state() {
  Vocab ents, rels;
  for (const char* n : {"a", "b", "c", "d"}) ents.add(n);
  rels.add("r");
  ModelConfig cfg;
  cfg.model = ModelKind::kTransE;
  cfg.dim = 2;
  cfg.norm = 1;
  EmbeddingState s = init_state(cfg, ents, rels);
  const double pos[] = {0.0, 1.0, 1.0, 3.0};
  for (std::size_t i = 0; i < 4; ++i) {
    s.entity.row(i)[0] = pos[i];
    s.entity.row(i)[1] = 0.0;
  }
  s.relation.row(0)[0] = 1.0;
  s.relation.row(0)[1] = 0.0;
  return s;
}

std::vector<Fact> random_facts(std::mt19937_64& rng) {
  const std::uint32_t n_ent = 5 + rng() % 40;
  const std::uint32_t n_rel = 1 + rng() % 6;
  const std::size_t n = 10 + rng() % 200;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
  std::vector<Fact> out;
  for (std::size_t i = 0; i < n; ++i) {
    Fact f{static_cast<std::uint32_t>(rng() % n_ent), static_cast<std::uint32_t>(rng() % n_rel),
           static_cast<std::uint32_t>(rng() % n_ent)};
    if (seen.emplace(f.head, f.rel, f.tail).second) out.push_back(f);
  }
  return out;
}

SynthConfig small_corpus() {
  SynthConfig cfg;
  cfg.n_users = 8;
  cfg.n_datasets_cat = 10;
  cfg.n_datasets_num = 4;
  cfg.tasks_per_dataset = 3;
  return cfg;
}

}  // namespace

TEST_CASE("numeric literals with many values are bucketed into quintiles") {
  Graph g;
  for (int i = 1; i <= 20; ++i) add(g, "dataset/d" + std::to_string(i), "numberOfInstances", Term::integer(i));
  for (int i = 1; i <= 20; ++i) add(g, "dataset/d" + std::to_string(i), "numberOfClasses", Term::integer(i % 3));
  auto enc = LiteralEncoder::fit(g);
  REQUIRE(enc.cuts().count("numberOfInstances") == 1);
  CHECK(enc.cuts().at("numberOfInstances") == std::vector<double>{4, 8, 12, 16});
  CHECK(enc.cuts().count("numberOfClasses") == 0);
  const Term rel = iri_term("numberOfInstances");
  CHECK(enc.encode(rel, Term::integer(4)) == "bucket:numberOfInstances:q0");
  CHECK(enc.encode(rel, Term::integer(5)) == "bucket:numberOfInstances:q1");
  CHECK(enc.encode(rel, Term::integer(20)) == "bucket:numberOfInstances:q4");
  CHECK(enc.encode(iri_term("numberOfClasses"), Term::integer(2)) == "literal:2");
  auto back = LiteralEncoder::from_json(enc.to_json());
  CHECK(back.cuts() == enc.cuts());
}

TEST_CASE("reified constraints collapse to direct algorithm edges") {
  Graph g;
  add(g, "task/1", v::kType, iri_term(v::kTask));
  add(g, "task/1", v::kHasConstraint, Term::iri("constraint/1"));
  add(g, "constraint/1", v::kType, iri_term(v::kAlgorithmConstraint));
  add(g, "constraint/1", v::kOnAlgorithm, Term::iri("algorithm/SVM"));
  add(g, "constraint/1", "isHard", Term::boolean(true));
  auto facts = view_facts(g, LiteralEncoder::fit(g));
  REQUIRE(facts.size() == 2);
  std::set<std::tuple<std::string, std::string, std::string>> got;
  for (const auto& f : facts) got.emplace(f.head, f.rel, f.tail);
  CHECK(got.count({"task/1", std::string(v::kHasConstraint), "algorithm/SVM"}) == 1);
  for (const auto& f : facts) CHECK(f.head != "constraint/1");
}

TEST_CASE("split keeps every valid and test term in train") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    auto facts = random_facts(rng);
    SplitSpec spec;
    spec.seed = static_cast<std::uint64_t>(trial);
    auto s = split(facts, spec);
    CHECK(s.train.size() + s.valid.size() + s.test.size() == facts.size());
    std::set<std::uint32_t> ents, rels;
    for (const auto& f : s.train) {
      ents.insert(f.head);
      ents.insert(f.tail);
      rels.insert(f.rel);
    }
    for (const auto* part : {&s.valid, &s.test}) {
      for (const auto& f : *part) {
        CHECK(ents.count(f.head));
        CHECK(ents.count(f.tail));
        CHECK(rels.count(f.rel));
      }
    }
    auto again = split(facts, spec);
    CHECK(again.test.size() == s.test.size());
    CHECK(again.moved_to_train == s.moved_to_train);
  }
}

TEST_CASE("split rejects bad ratios") {
  SplitSpec bad;
  bad.train = 0.9;
  CHECK_THROWS_AS(split({}, bad), std::invalid_argument);
}

TEST_CASE("realistic rank with ties in every mode") {
  const auto s = line_state();
  const std::vector<NamedFact> test{{"a", "r", "b"}};
  EvalOptions raw;
  raw.sides = Sides::kTail;
  auto r = evaluate(s, test, raw);
  CHECK(r.tail.mean_rank == doctest::Approx(1.5));
  CHECK(r.tail.hits1 == 0.0);
  CHECK(r.tail.hits3 == 1.0);

  std::vector<NamedFact> known{{"a", "r", "b"}, {"a", "r", "c"}};
  EvalOptions kn;
  kn.mode = RankMode::kExcludeKnown;
  kn.sides = Sides::kTail;
  kn.known = &known;
  CHECK(evaluate(s, test, kn).tail.mean_rank == doctest::Approx(1.0));

  EvalOptions both;
  auto b = evaluate(s, test, both);
  CHECK(b.head.mean_rank == doctest::Approx(1.0));
  CHECK(b.head.n == 1);
  CHECK(b.tail.n == 1);

  auto skipped = evaluate(s, {{"a", "r", "zzz"}}, raw);
  CHECK(skipped.skipped == 1);
  CHECK(skipped.tail.n == 0);

  EvalOptions filtered;
  filtered.mode = RankMode::kRangeFiltered;
  CHECK_THROWS_AS(evaluate(s, test, filtered), std::invalid_argument);
}

TEST_CASE("range filtering never ranks worse than raw") {
  const Schema& schema = Schema::data_analytics();
  Graph g = synthesize(schema, small_corpus());
  auto data = prepare_lp_data(g, schema, {});
  ModelConfig cfg;
  cfg.model = ModelKind::kTransE;
  cfg.dim = 16;
  cfg.max_epochs = 20;
  auto [state, hist] = train(data.view.entities, data.view.relations, data.split.train, data.split.valid, cfg, {});
  const auto test = data.view.named(data.split.test);
  EvalOptions raw, filtered;
  filtered.mode = RankMode::kRangeFiltered;
  filtered.candidates = &data.candidates;
  auto a = evaluate(state, test, raw);
  auto b = evaluate(state, test, filtered);
  CHECK(a.tail.n == b.tail.n);
  CHECK(b.tail.hits3 >= a.tail.hits3);
  CHECK(b.head.hits3 >= a.head.hits3);
  CHECK(b.tail.mean_rank <= a.tail.mean_rank);
  CHECK(b.head.mean_rank <= a.head.mean_rank);
  CHECK(b.tail.mrr >= a.tail.mrr);

  for (const auto& f : test) {
    if (f.rel != v::kHasConstraint) continue;
    const auto* tails = data.candidates.tails(f.rel);
    REQUIRE(tails);
    CHECK(std::find(tails->begin(), tails->end(), f.tail) != tails->end());
  }
  auto idx = CandidateIndex::from_json(data.candidates.to_json());
  CHECK(idx.to_json() == data.candidates.to_json());
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("grid search rows are cached and reproducible") {
  const Schema& schema = Schema::data_analytics();
  Graph g = synthesize(schema, small_corpus());
  auto data = prepare_lp_data(g, schema, {});
  SearchSpace space{{ModelKind::kTransE, ModelKind::kDistMult}, {8}, {0.01}, {1}};
  GridOptions opts;
  opts.base.max_epochs = 6;
  opts.stop.frequency = 3;
  auto dir = std::filesystem::temp_directory_path() / "kgintent_grid_cache_test";
  std::filesystem::remove_all(dir);
  opts.cache_dir = dir;
  auto first = grid_search(data, space, opts);
  auto second = grid_search(data, space, opts);
  REQUIRE(first.size() == 2);
  REQUIRE(second.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK_FALSE(first[i].cached);
    CHECK(second[i].cached);
    CHECK(first[i].config == second[i].config);
    CHECK(first[i].report.to_json() == second[i].report.to_json());
    CHECK(first[i].valid_hits3 == second[i].valid_hits3);
  }
  const auto csv = grid_csv(first);
  CHECK(csv.rfind("model,dim,lr,npp,valid_hits3", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("tpe startup matches random search and beats it on a smooth objective") {
  Objective f = [](const ModelConfig& c) {
    const double a = std::log(static_cast<double>(c.dim) / 40.0);
    const double b = std::log(c.lr / 0.005);
    const double d = std::log(static_cast<double>(c.npp) / 8.0);
    return std::exp(-(a * a + b * b + d * d) / 2.0);
  };
  TpeSpace space;
  ModelConfig base;
  TpeOptions opts;
  opts.n_iter = 60;
  opts.seed = 11;
  auto tpe = tpe_search(f, space, base, opts);
  auto rnd = random_search(f, space, base, 60, 11);
  for (std::size_t i = 0; i < opts.n_startup; ++i) CHECK(tpe.trials[i].config == rnd.trials[i].config);
  CHECK(tpe.running_best().back() >= rnd.running_best().back());
  auto again = tpe_search(f, space, base, opts);
  CHECK(again.to_jsonl().size() > 0);
  for (std::size_t i = 0; i < tpe.trials.size(); ++i) CHECK(again.trials[i].config == tpe.trials[i].config);
  for (const auto& t : tpe.trials) {
    CHECK(t.config.dim >= 2);
    CHECK(t.config.dim <= 256);
    CHECK(t.config.lr >= 1e-4 * (1 - 1e-12));
    CHECK(t.config.lr <= 0.1 * (1 + 1e-12));
    CHECK(t.config.npp >= 1);
    CHECK(t.config.npp <= 100);
  }
  const auto best = tpe.running_best();
  for (std::size_t i = 1; i < best.size(); ++i) CHECK(best[i] >= best[i - 1]);
}
