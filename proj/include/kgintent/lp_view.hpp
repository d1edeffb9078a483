#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/kge.hpp"
#include "kgintent/schema.hpp"

namespace kgintent {

// Maps literal objects to entity names. Relations with many distinct numeric
// values are bucketed into quintiles ("bucket:<rel>:q<k>"); every other
// literal becomes "literal:<value>".
class LiteralEncoder {
 public:
  static LiteralEncoder fit(const Graph& g, std::size_t max_discrete = 10);

  std::string encode(const Term& relation, const Term& literal) const;
  // Entity name for a term in object position (IRIs map to their value).
  std::string entity_name(const Term& relation, const Term& object) const;

  const std::map<std::string, std::vector<double>>& cuts() const { return cuts_; }
  std::string to_json() const;
  static LiteralEncoder from_json(const std::string& text);

 private:
  std::map<std::string, std::vector<double>> cuts_;  // relation -> 4 ascending boundaries
};

// The graph as link-prediction training data. Each reified algorithm
// constraint is collapsed into a direct (task, hasConstraint, algorithm)
// edge; other constraint nodes are dropped.
std::vector<NamedFact> view_facts(const Graph& g, const LiteralEncoder& enc);

struct LpView {
  LiteralEncoder encoder;
  Vocab entities;
  Vocab relations;
  std::vector<Fact> facts;

  std::vector<NamedFact> named(const std::vector<Fact>& fs) const;
};

LpView build_view(const Graph& g);
LpView build_view(const Graph& g, const LiteralEncoder& enc);

// Schema-derived candidate entities per relation, by name.
class CandidateIndex {
 public:
  static CandidateIndex build(const Schema& schema, const Graph& g, const LpView& view);

  const std::vector<std::string>* tails(const std::string& rel) const;
  const std::vector<std::string>* heads(const std::string& rel) const;

  std::string to_json() const;
  static CandidateIndex from_json(const std::string& text);

 private:
  std::map<std::string, std::vector<std::string>> tails_;
  std::map<std::string, std::vector<std::string>> heads_;
};

}  // namespace kgintent
