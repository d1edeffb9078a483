#include "kgintent/ntriples.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

namespace kgintent {

namespace {

class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }

  Term term(std::string_view what) {
    skip_ws();
    if (pos_ >= s_.size()) fail("expected " + std::string(what));
    char c = s_[pos_];
    if (c == '<') return iri();
    if (c == '"') return literal();
    fail("expected IRI or literal for " + std::string(what));
  }

  void terminator() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '.') fail("missing ' .' terminator");
    ++pos_;
    if (!done()) fail("trailing characters after terminator");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_no_, msg); }

 private:
  Term iri() {
    auto end = s_.find('>', pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated IRI");
    std::string value(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    try {
      return Term::iri(std::move(value));
    } catch (const TermError& e) {
      fail(e.what());
    }
  }

  Term literal() {
    std::string value;
    ++pos_;
    bool closed = false;
    while (pos_ < s_.size()) {
      char c = s_[pos_++];
      if (c == '"') {
        closed = true;
        break;
      }
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        char e = s_[pos_++];
        switch (e) {
          case 'n': value += '\n'; break;
          case 'r': value += '\r'; break;
          case 't': value += '\t'; break;
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      } else {
        value += c;
      }
    }
    if (!closed) fail("unterminated literal");
    if (s_.substr(pos_, 2) != "^^") fail("literal lacks ^^datatype suffix");
    pos_ += 2;
    auto start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    auto dt = parse_datatype(s_.substr(start, pos_ - start));
    if (!dt) fail("unknown datatype '" + std::string(s_.substr(start, pos_ - start)) + "'");
    try {
      return Term::literal(std::move(value), *dt);
    } catch (const TermError& e) {
      fail(e.what());
    }
  }

  std::string_view s_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

}  // namespace

Triple parse_triple_line(std::string_view line, std::size_t line_no) {
  LineCursor cur(line, line_no);
  Triple t;
  t.subject = cur.term("subject");
  t.relation = cur.term("relation");
  t.object = cur.term("object");
  cur.terminator();
  try {
    check_well_formed(t);
  } catch (const MalformedTripleError& e) {
    cur.fail(e.what());
  }
  return t;
}

void write_ntriples(const Graph& g, std::ostream& out) {
  for (const auto& t : g.triples()) out << to_string(t) << '\n';
}

Graph read_ntriples(std::istream& in) {
  Graph g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    g.add(parse_triple_line(line, line_no));
  }
  return g;
}

void save_ntriples(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_ntriples(g, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Graph load_ntriples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_ntriples(in);
}

}  // namespace kgintent
