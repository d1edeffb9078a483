#include <doctest.h>

#include <sstream>

#include "kgintent/ntriples.hpp"
#include "kgintent/pattern.hpp"
#include "kgintent/synth.hpp"
#include "kgintent/vocab.hpp"

using namespace kgintent;

namespace {

std::string dump(const Graph& g) {
  std::ostringstream out;
  write_ntriples(g, out);
  return out.str();
}

}  // namespace

TEST_CASE("dataset profiles") {
  SynthConfig cfg;
  auto profiles = synth_dataset_profiles(cfg);
  CHECK(profiles.size() == 96);
  std::size_t cat = 0;
  for (const auto& p : profiles) {
    CHECK_NOTHROW(p.check());
    CHECK(p.n_numeric + p.n_categorical == p.n_features);
    CHECK(p.n_instances >= 50);
    CHECK(p.n_instances <= 100000);
    CHECK(p.n_features >= 2);
    CHECK(p.n_features <= 500);
    cat += p.target_type == TargetType::kCategorical;
  }
  CHECK(cat == 68);
  CHECK(synth_dataset_profiles(cfg) == profiles);
}

TEST_CASE("default corpus size and validity") {
  const Schema& s = Schema::data_analytics();
  SynthConfig cfg;
  Graph full = synthesize_full(s, cfg);
  auto counts = count_corpus(full, s.to_graph());
  MESSAGE("experiment=" << counts.experiment << " characteristic=" << counts.characteristic
                        << " schema=" << counts.schema);
  CHECK(counts.experiment >= 11000);
  CHECK(counts.experiment <= 15000);
  auto bad = validate_all(s, full);
  for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 5); ++i) {
    FAIL_CHECK(to_string(bad[i].first) << " -> " << bad[i].second.message);
  }
  CHECK(bad.empty());
}

TEST_CASE("determinism") {
  const Schema& s = Schema::data_analytics();
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.n_datasets_cat = 10;
  cfg.n_datasets_num = 5;
  CHECK(dump(synthesize(s, cfg)) == dump(synthesize(s, cfg)));
  SynthConfig other = cfg;
  other.seed = 8;
  CHECK(dump(synthesize(s, cfg)) != dump(synthesize(s, other)));
}

TEST_CASE("constraint_rate zero yields no constraints") {
  SynthConfig cfg;
  cfg.constraint_rate = 0.0;
  Graph g = synthesize(Schema::data_analytics(), cfg);
  CHECK(g.find(std::nullopt, Term::iri("hasConstraint"), std::nullopt).empty());
}

TEST_CASE("intent follows target type up to the noise rate") {
  SynthConfig cfg;
  cfg.n_datasets_cat = 150;
  cfg.n_datasets_num = 100;
  cfg.tasks_per_dataset = 8;
  Graph g = synthesize(Schema::data_analytics(), cfg);
  Pattern p{{{var("t"), iri("usesDataset"), var("d")},
             {var("d"), iri("targetType"), var("y")},
             {var("t"), iri("hasIntent"), var("i")}}};
  auto rows = match(g, p);
  REQUIRE(rows.size() == 2000);
  std::size_t consistent = 0;
  for (const auto& b : rows) {
    bool cat = b.at("y").value() == "categorical";
    consistent += b.at("i").value() == (cat ? "Classification" : "Regression");
  }
  double rate = static_cast<double>(consistent) / static_cast<double>(rows.size());
  CHECK(rate == doctest::Approx(1.0 - cfg.intent_noise).epsilon(0.02));
}

TEST_CASE("workflows are connected chains ending in a matching predictor") {
  const Schema& s = Schema::data_analytics();
  SynthConfig cfg;
  Graph g = synthesize(s, cfg);
  const Term has_step = Term::iri("hasStep"), next = Term::iri("followedBy"),
             uses = Term::iri("usesAlgorithm");
  for (const auto& t : g.find(std::nullopt, Term::iri("achievedBy"), std::nullopt)) {
    auto steps = g.objects(t.object, has_step);
    REQUIRE(!steps.empty());
    CHECK(steps.size() <= cfg.max_steps);
    std::vector<Term> heads;
    for (const auto& st : steps) {
      if (g.subjects(next, st).empty()) heads.push_back(st);
    }
    REQUIRE(heads.size() == 1);
    std::set<Term> seen;
    Term cur = heads[0];
    while (true) {
      REQUIRE(seen.insert(cur).second);
      auto succ = g.objects(cur, next);
      REQUIRE(succ.size() <= 1);
      if (succ.empty()) break;
      cur = succ[0];
    }
    CHECK(seen.size() == steps.size());
    auto intent = g.object(t.subject, Term::iri("hasIntent"));
    auto last = g.object(cur, uses);
    REQUIRE(intent);
    REQUIRE(last);
    CHECK_FALSE(s.is_preprocessor(last->value()));
    CHECK(s.algorithms_for(intent->value()).count(last->value()) == 1);
  }
}

TEST_CASE("config json round trip") {
  SynthConfig cfg;
  cfg.seed = 99;
  cfg.constraint_rate = 0.25;
  auto back = synth_config_from_json(synth_config_to_json(cfg));
  CHECK(back.seed == 99);
  CHECK(back.constraint_rate == 0.25);
  CHECK_THROWS(synth_config_from_json(R"({"constraint_rate": 1.5})"));
}
