#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgintent/term.hpp"

namespace kgintent {

using TermId = std::uint32_t;

enum class TripleField : std::uint8_t { kSubject, kRelation, kObject };

std::string_view field_name(TripleField f);

// Rejection of a structurally malformed triple; field() names the offender.
class MalformedTripleError : public std::invalid_argument {
 public:
  MalformedTripleError(TripleField field, const std::string& what)
      : std::invalid_argument(std::string(field_name(field)) + ": " + what), field_(field) {}
  TripleField field() const { return field_; }

 private:
  TripleField field_;
};

// Index permutation used to answer a scan.
enum class IndexOrder : std::uint8_t { kSpo, kPos, kOsp };

// In-memory triple store with set semantics. Terms are interned; each triple is
// kept in three sorted permutations so any bound prefix is a range query.
//
// Reads are const and may run concurrently; writers need exclusive access.
class Graph {
 public:
  using IdTriple = std::array<TermId, 3>;  // subject, relation, object

  // Returns true when the triple was not present before.
  bool add(const Triple& t);
  bool remove(const Triple& t);
  bool contains(const Triple& t) const;

  std::size_t size() const { return spo_.size(); }
  bool empty() const { return spo_.empty(); }

  // Per-index sizes; all three equal size() when the indexes are coherent.
  std::array<std::size_t, 3> index_sizes() const { return {spo_.size(), pos_.size(), osp_.size()}; }

  // All triples matching the bound positions. `order` forces a specific
  // index; by default the most selective available one is used.
  std::vector<Triple> find(const std::optional<Term>& s, const std::optional<Term>& r,
                           const std::optional<Term>& o,
                           std::optional<IndexOrder> order = std::nullopt) const;

  // Id-level scan used by the pattern matcher. Unbound positions are nullopt.
  void scan(std::optional<TermId> s, std::optional<TermId> r, std::optional<TermId> o,
            const std::function<void(const IdTriple&)>& visit,
            std::optional<IndexOrder> order = std::nullopt) const;

  std::optional<TermId> lookup(const Term& t) const;
  const Term& term(TermId id) const { return terms_[id]; }

  // Objects of (s, r, ?) and subjects of (?, r, o).
  std::vector<Term> objects(const Term& s, const Term& r) const;
  std::vector<Term> subjects(const Term& r, const Term& o) const;
  std::optional<Term> object(const Term& s, const Term& r) const;

  // Every stored triple in (subject, relation, object) term order.
  std::vector<Triple> triples() const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.triples() == b.triples(); }

 private:
  TermId intern(const Term& t);
  Triple materialize(const IdTriple& t) const { return {terms_[t[0]], terms_[t[1]], terms_[t[2]]}; }

  std::vector<Term> terms_;
  std::unordered_map<Term, TermId> ids_;
  std::set<IdTriple> spo_;
  std::set<IdTriple> pos_;  // stored as (relation, object, subject)
  std::set<IdTriple> osp_;  // stored as (object, subject, relation)
};

// Checks the structural invariants of a triple; throws MalformedTripleError.
void check_well_formed(const Triple& t);

}  // namespace kgintent
