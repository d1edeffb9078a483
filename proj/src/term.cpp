#include "kgintent/term.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>

namespace kgintent {

namespace {

bool parses_integer(std::string_view s) {
  if (s.empty()) return false;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view datatype_name(Datatype dt) {
  switch (dt) {
    case Datatype::kString: return "string";
    case Datatype::kInteger: return "integer";
    case Datatype::kFloat: return "float";
    case Datatype::kBoolean: return "boolean";
  }
  return "string";
}

std::optional<Datatype> parse_datatype(std::string_view name) {
  if (name == "string") return Datatype::kString;
  if (name == "integer") return Datatype::kInteger;
  if (name == "float") return Datatype::kFloat;
  if (name == "boolean") return Datatype::kBoolean;
  return std::nullopt;
}

bool valid_iri(std::string_view value) {
  if (value.empty()) return false;
  for (char c : value) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>' || c == '"') {
      return false;
    }
  }
  return true;
}

Term Term::iri(std::string value) {
  if (!valid_iri(value)) throw TermError("invalid IRI '" + value + "'");
  return Term(TermKind::kIri, std::move(value), Datatype::kString);
}

Term Term::literal(std::string value, Datatype datatype) {
  switch (datatype) {
    case Datatype::kString:
      break;
    case Datatype::kInteger:
      if (!parses_integer(value)) throw TermError("'" + value + "' is not an integer literal");
      break;
    case Datatype::kFloat: {
      auto v = parse_double(value);
      if (!v || !std::isfinite(*v)) throw TermError("'" + value + "' is not a float literal");
      break;
    }
    case Datatype::kBoolean:
      if (value != "true" && value != "false") {
        throw TermError("'" + value + "' is not a boolean literal");
      }
      break;
  }
  return Term(TermKind::kLiteral, std::move(value), datatype);
}

Term Term::integer(std::int64_t value) {
  return Term(TermKind::kLiteral, std::to_string(value), Datatype::kInteger);
}

Term Term::real(double value) {
  if (!std::isfinite(value)) throw TermError("non-finite float literal");
  return Term(TermKind::kLiteral, format_real(value), Datatype::kFloat);
}

Term Term::boolean(bool value) {
  return Term(TermKind::kLiteral, value ? "true" : "false", Datatype::kBoolean);
}

std::optional<double> Term::numeric() const {
  if (kind_ != TermKind::kLiteral) return std::nullopt;
  if (datatype_ != Datatype::kInteger && datatype_ != Datatype::kFloat) return std::nullopt;
  return parse_double(value_);
}

std::optional<bool> Term::as_bool() const {
  if (kind_ != TermKind::kLiteral || datatype_ != Datatype::kBoolean) return std::nullopt;
  return value_ == "true";
}

std::string Term::to_string() const {
  if (is_iri()) return "<" + value_ + ">";
  std::string out = "\"";
  for (char c : value_) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += "\"^^";
  out += datatype_name(datatype_);
  return out;
}

std::strong_ordering operator<=>(const Term& a, const Term& b) {
  if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
  if (auto c = a.value_.compare(b.value_); c != 0) {
    return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  return a.datatype_ <=> b.datatype_;
}

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string s(buf.data(), ptr);
  // Keep float literals visibly non-integral so they never round-trip as integers.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string to_string(const Triple& t) {
  return t.subject.to_string() + " " + t.relation.to_string() + " " + t.object.to_string() + " .";
}

}  // namespace kgintent
