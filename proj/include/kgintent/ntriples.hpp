#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kgintent/graph.hpp"

namespace kgintent {

// Parse failure in the flat triple format; line() is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// One triple per line:  <s> <r> <o> .   or   <s> <r> "lit"^^datatype .
// Blank lines and lines starting with '#' are skipped.
Triple parse_triple_line(std::string_view line, std::size_t line_no);

void write_ntriples(const Graph& g, std::ostream& out);
Graph read_ntriples(std::istream& in);

void save_ntriples(const Graph& g, const std::filesystem::path& path);
Graph load_ntriples(const std::filesystem::path& path);

}  // namespace kgintent
