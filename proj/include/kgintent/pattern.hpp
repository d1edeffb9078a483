#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kgintent/graph.hpp"

namespace kgintent {

struct Variable {
  std::string name;
  friend bool operator==(const Variable&, const Variable&) = default;
};

using Slot = std::variant<Term, Variable>;

struct Atom {
  Slot subject;
  Slot relation;
  Slot object;
};

enum class Comparator : std::uint8_t { kEq, kNe, kLt, kLe, kGt, kGe };

std::optional<Comparator> parse_comparator(std::string_view op);

struct Filter {
  std::string variable;
  Comparator op = Comparator::kEq;
  Term value;
};

// Conjunctive basic graph pattern with optional post-filters.
struct Pattern {
  std::vector<Atom> atoms;
  std::vector<Filter> filters;
  std::optional<std::string> group_var;
  std::optional<std::size_t> limit;

  std::set<std::string> variables() const;
};

class PatternError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Variable name -> bound term. All bindings of one match share the key set.
using Binding = std::map<std::string, Term>;

// Throws PatternError when a filter or group variable never appears in an atom.
void check_pattern(const Pattern& p);

// Every binding satisfying all atoms and filters, sorted lexicographically by
// bound terms (variables in name order), then truncated to p.limit.
std::vector<Binding> match(const Graph& g, const Pattern& p);

// Groups matches by `var`, sorts by count descending then term ascending and
// keeps the top k.
std::vector<std::pair<Term, std::size_t>> rank_by_frequency(const Graph& g, const Pattern& p,
                                                            const std::string& var,
                                                            std::size_t k);

// Entities typed as `cls` or any transitive subclass of it.
std::set<Term> instances_of(const Graph& g, const Term& cls);

// `cls` plus every transitive subclass.
std::set<Term> subclass_closure(const Graph& g, const Term& cls);

bool compare_terms(const Term& lhs, Comparator op, const Term& rhs);

// Shorthands for writing patterns in code.
inline Slot var(std::string name) { return Variable{std::move(name)}; }
inline Slot iri(std::string value) { return Term::iri(std::move(value)); }

}  // namespace kgintent
