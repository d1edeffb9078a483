#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kgintent/graph.hpp"
#include "kgintent/ntriples.hpp"
#include "kgintent/pattern.hpp"
#include "kgintent/schema.hpp"

using namespace kgintent;

namespace {

Triple tri(const std::string& s, const std::string& r, const std::string& o) {
  return {Term::iri(s), Term::iri(r), Term::iri(o)};
}

Graph three_tasks() {
  Graph g;
  g.add(tri("taskA", "hasIntent", "Classification"));
  g.add(tri("taskB", "hasIntent", "Classification"));
  g.add(tri("taskC", "hasIntent", "Regression"));
  g.add(tri("taskA", "requestedBy", "u1"));
  g.add(tri("taskB", "requestedBy", "u2"));
  g.add(tri("taskC", "requestedBy", "u2"));
  return g;
}

Graph random_graph(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Graph g;
  while (g.size() < n) {
    auto e = [&] { return Term::iri("e" + std::to_string(rng() % 300)); };
    Term r = Term::iri("r" + std::to_string(rng() % 7));
    Term o;
    switch (rng() % 5) {
      case 0: o = Term::integer(static_cast<std::int64_t>(rng() % 1000) - 500); break;
      case 1: o = Term::real(static_cast<double>(rng() % 10000) / 7.0); break;
      case 2: o = Term::string("say \"hi\"\n\t" + std::to_string(rng() % 50)); break;
      case 3: o = Term::boolean(rng() % 2); break;
      default: o = e();
    }
    g.add({e(), r, o});
  }
  return g;
}

}  // namespace

TEST_CASE("insert then read back") {
  Graph g;
  g.add(tri("taskA", "hasIntent", "Classification"));
  Pattern p{{{iri("taskA"), iri("hasIntent"), var("x")}}};
  auto rows = match(g, p);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("x") == Term::iri("Classification"));
}

TEST_CASE("set semantics") {
  Graph g;
  CHECK(g.add(tri("a", "r", "b")));
  CHECK_FALSE(g.add(tri("a", "r", "b")));
  CHECK(g.size() == 1);
}

TEST_CASE("malformed triples name the offending field") {
  Graph g;
  try {
    g.add({Term::iri("a"), Term::string("lit"), Term::iri("b")});
    FAIL("expected rejection");
  } catch (const MalformedTripleError& e) {
    CHECK(e.field() == TripleField::kRelation);
  }
  try {
    g.add({Term::integer(3), Term::iri("r"), Term::iri("b")});
    FAIL("expected rejection");
  } catch (const MalformedTripleError& e) {
    CHECK(e.field() == TripleField::kSubject);
  }
  CHECK_THROWS_AS(Term::iri("has space"), TermError);
  CHECK_THROWS_AS(Term::literal("abc", Datatype::kInteger), TermError);
  CHECK(g.empty());
}

TEST_CASE("match counts and joins") {
  Graph g = three_tasks();
  CHECK(match(g, {{{var("t"), iri("hasIntent"), iri("Classification")}}}).size() == 2);
  Pattern join{{{var("t"), iri("requestedBy"), iri("u1")}, {var("t"), iri("hasIntent"), var("i")}}};
  auto rows = match(g, join);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("i") == Term::iri("Classification"));
  CHECK(match(Graph{}, join).empty());
}

TEST_CASE("match orders before limiting") {
  Graph g = three_tasks();
  Pattern p{{{var("t"), iri("hasIntent"), var("i")}}};
  auto all = match(g, p);
  REQUIRE(all.size() == 3);
  CHECK(all[0].at("i") == Term::iri("Classification"));
  CHECK(all[0].at("t") == Term::iri("taskA"));
  p.limit = 1;
  auto one = match(g, p);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == all[0]);
}

TEST_CASE("filters and pattern validation") {
  Graph g;
  g.add({Term::iri("d1"), Term::iri("numInstances"), Term::integer(150)});
  g.add({Term::iri("d2"), Term::iri("numInstances"), Term::integer(5000)});
  Pattern p{{{var("d"), iri("numInstances"), var("n")}}};
  p.filters.push_back({"n", Comparator::kGt, Term::integer(1000)});
  auto rows = match(g, p);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("d") == Term::iri("d2"));
  p.filters.push_back({"missing", Comparator::kEq, Term::integer(1)});
  CHECK_THROWS_AS(match(g, p), PatternError);
  Pattern zero{{{var("d"), iri("numInstances"), var("n")}}};
  zero.limit = 0;
  CHECK_THROWS_AS(match(g, zero), PatternError);
}

TEST_CASE("ground patterns yield one empty binding iff stored") {
  Graph g = three_tasks();
  auto hit = match(g, {{{iri("taskA"), iri("hasIntent"), iri("Classification")}}});
  REQUIRE(hit.size() == 1);
  CHECK(hit[0].empty());
  CHECK(match(g, {{{iri("taskA"), iri("hasIntent"), iri("Regression")}}}).empty());
}

TEST_CASE("rank_by_frequency") {
  Graph g;
  for (int i = 0; i < 3; ++i) g.add(tri("t" + std::to_string(i), "hasRequirement", "Accuracy"));
  g.add(tri("t9", "hasRequirement", "F1"));
  Pattern p{{{var("t"), iri("hasRequirement"), var("m")}}};
  auto ranked = rank_by_frequency(g, p, "m", 5);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0] == std::pair{Term::iri("Accuracy"), std::size_t{3}});
  CHECK(ranked[1] == std::pair{Term::iri("F1"), std::size_t{1}});

  Graph tie;
  tie.add(tri("t1", "hasRequirement", "Zeta"));
  tie.add(tri("t2", "hasRequirement", "Alpha"));
  tie.add(tri("t3", "hasRequirement", "Mid"));
  auto tied = rank_by_frequency(tie, p, "m", 2);
  REQUIRE(tied.size() == 2);
  CHECK(tied[0].first == Term::iri("Alpha"));
  CHECK(tied[1].first == Term::iri("Mid"));
  CHECK(rank_by_frequency(Graph{}, p, "m", 3).empty());
  CHECK_THROWS_AS(rank_by_frequency(g, p, "nope", 3), PatternError);
}

TEST_CASE("instances_of follows the subclass closure") {
  Graph g = bootstrap_schema();
  auto intents = instances_of(g, Term::iri("Intent"));
  for (const char* t : {"Classification", "Regression", "Clustering", "Predict"}) {
    CHECK(intents.count(Term::iri(t)) == 1);
  }
  Graph h;
  h.add(tri("Sub", "rdfs:subClassOf", "Super"));
  h.add(tri("x", "rdf:type", "Sub"));
  CHECK(instances_of(h, Term::iri("Super")).count(Term::iri("x")) == 1);
  CHECK(instances_of(h, Term::iri("Unknown")).empty());
}

TEST_CASE("index coherence across permutations") {
  Graph g = random_graph(2000, 11);
  auto sizes = g.index_sizes();
  CHECK(sizes[0] == g.size());
  CHECK(sizes[1] == g.size());
  CHECK(sizes[2] == g.size());
  auto triples = g.triples();
  for (std::size_t i = 0; i < triples.size(); i += 97) {
    const auto& t = triples[i];
    for (auto order : {IndexOrder::kSpo, IndexOrder::kPos, IndexOrder::kOsp}) {
      auto by_s = g.find(t.subject, std::nullopt, std::nullopt, order);
      auto by_r = g.find(std::nullopt, t.relation, std::nullopt, order);
      auto by_o = g.find(std::nullopt, std::nullopt, t.object, order);
      CHECK(by_s == g.find(t.subject, std::nullopt, std::nullopt));
      CHECK(by_r == g.find(std::nullopt, t.relation, std::nullopt));
      CHECK(by_o == g.find(std::nullopt, std::nullopt, t.object));
      CHECK(std::find(by_s.begin(), by_s.end(), t) != by_s.end());
    }
  }
}

TEST_CASE("flat file round trip") {
  auto dir = std::filesystem::temp_directory_path() / "kgintent_store_test";
  std::filesystem::create_directories(dir);
  SUBCASE("empty graph") {
    save_ntriples(Graph{}, dir / "empty.nt");
    CHECK(std::filesystem::file_size(dir / "empty.nt") == 0);
    CHECK(load_ntriples(dir / "empty.nt").empty());
  }
  SUBCASE("ten triples") {
    Graph g = random_graph(10, 3);
    save_ntriples(g, dir / "ten.nt");
    CHECK(load_ntriples(dir / "ten.nt") == g);
  }
  SUBCASE("random graphs with literals") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Graph g = random_graph(1500, seed);
      save_ntriples(g, dir / "big.nt");
      CHECK(load_ntriples(dir / "big.nt") == g);
    }
  }
  SUBCASE("line format") {
    Graph g;
    g.add({Term::iri("d"), Term::iri("numInstances"), Term::integer(150)});
    std::ostringstream out;
    write_ntriples(g, out);
    CHECK(out.str() == "<d> <numInstances> \"150\"^^integer .\n");
  }
  SUBCASE("malformed line reports its number") {
    std::ofstream(dir / "bad.nt") << "<a> <r> <b> .\n<a> <r> <c> .\n<a> <r> .\n";
    try {
      load_ntriples(dir / "bad.nt");
      FAIL("expected parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  std::filesystem::remove_all(dir);
}
