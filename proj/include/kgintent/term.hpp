#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgintent {

enum class TermKind : std::uint8_t { kIri, kLiteral };

enum class Datatype : std::uint8_t { kString, kInteger, kFloat, kBoolean };

std::string_view datatype_name(Datatype dt);
std::optional<Datatype> parse_datatype(std::string_view name);

// Raised when a term violates its lexical rules.
class TermError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An RDF-style atom: either an IRI or a typed literal. Construct through the
// factories, which enforce the lexical invariants.
class Term {
 public:
  // Empty IRI; only useful as a placeholder, rejected by Graph::add.
  Term() = default;

  static Term iri(std::string value);
  static Term literal(std::string value, Datatype datatype);
  static Term string(std::string value) { return literal(std::move(value), Datatype::kString); }
  static Term integer(std::int64_t value);
  static Term real(double value);
  static Term boolean(bool value);

  TermKind kind() const { return kind_; }
  bool is_iri() const { return kind_ == TermKind::kIri; }
  bool is_literal() const { return kind_ == TermKind::kLiteral; }
  const std::string& value() const { return value_; }
  Datatype datatype() const { return datatype_; }
  bool empty() const { return value_.empty() && kind_ == TermKind::kIri; }

  // Numeric value for integer/float literals.
  std::optional<double> numeric() const;
  std::optional<bool> as_bool() const;

  // N-Triples-style rendering: <iri> or "value"^^datatype.
  std::string to_string() const;

  friend bool operator==(const Term&, const Term&) = default;
  friend std::strong_ordering operator<=>(const Term& a, const Term& b);

 private:
  Term(TermKind kind, std::string value, Datatype dt)
      : kind_(kind), value_(std::move(value)), datatype_(dt) {}

  TermKind kind_ = TermKind::kIri;
  std::string value_;
  Datatype datatype_ = Datatype::kString;
};

// Shortest round-trip decimal form used for float literals.
std::string format_real(double value);

bool valid_iri(std::string_view value);

struct Triple {
  Term subject;
  Term relation;
  Term object;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

std::string to_string(const Triple& t);

}  // namespace kgintent

template <>
struct std::hash<kgintent::Term> {
  std::size_t operator()(const kgintent::Term& t) const noexcept {
    std::size_t h = std::hash<std::string>{}(t.value());
    return h ^ (static_cast<std::size_t>(t.kind()) * 0x9e3779b97f4a7c15ULL) ^
           (static_cast<std::size_t>(t.datatype()) << 7);
  }
};
