#include "kgintent/profiler.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;

namespace {

std::vector<std::string> split_record(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string sanitize(std::string_view name) {
  std::string out;
  for (char c : name) {
    unsigned char u = static_cast<unsigned char>(c);
    out += (std::isalnum(u) || c == '_' || c == '-' || c == '.') ? c : '_';
  }
  return out.empty() ? "unnamed" : out;
}

}  // namespace

std::string_view target_type_name(TargetType t) {
  return t == TargetType::kCategorical ? "categorical" : "numerical";
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "?"; }

std::size_t DatasetProfile::populated_fields() const {
  return 7 + (n_classes ? 1 : 0) + (imbalance ? 1 : 0) + (std_target ? 1 : 0);
}

void DatasetProfile::check() const {
  if (n_numeric + n_categorical != n_features) {
    throw std::invalid_argument("numeric + categorical feature counts must equal n_features");
  }
  if (pct_missing < 0.0 || pct_missing > 1.0) {
    throw std::invalid_argument("pct_missing outside [0,1]");
  }
  if (target_type == TargetType::kCategorical) {
    if (!n_classes || !imbalance || std_target) {
      throw std::invalid_argument("categorical target needs classes and imbalance only");
    }
    if (*imbalance < 1.0) throw std::invalid_argument("imbalance below 1");
  } else {
    if (n_classes || imbalance || !std_target) {
      throw std::invalid_argument("numerical target needs std_target only");
    }
    if (*std_target < 0.0) throw std::invalid_argument("negative std_target");
  }
}

Table read_table(std::istream& in, char delimiter) {
  Table t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (trim(line).empty()) continue;
      for (auto& c : split_record(line, delimiter)) t.header.push_back(trim(c));
      have_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto cells = split_record(line, delimiter);
    for (auto& c : cells) c = trim(std::move(c));
    cells.resize(t.header.size());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

DatasetProfile profile(const Table& table, const std::string& target, const std::string& name,
                       const ProfileOptions& options) {
  if (table.header.empty()) throw ProfileError("empty file: no header row");
  auto it = std::find(table.header.begin(), table.header.end(), target);
  if (it == table.header.end()) throw ProfileError("target column '" + target + "' not found");
  if (table.rows.empty()) throw ProfileError("no data rows");
  const std::size_t target_col = static_cast<std::size_t>(it - table.header.begin());

  DatasetProfile p;
  p.name = name;
  p.n_instances = table.rows.size();
  p.n_features = table.header.size() - 1;

  std::size_t missing = 0;
  for (std::size_t col = 0; col < table.header.size(); ++col) {
    if (col == target_col) continue;
    bool numeric = true;
    for (const auto& row : table.rows) {
      const auto& cell = row[col];
      if (is_missing(cell)) {
        ++missing;
      } else if (numeric && !parse_number(cell)) {
        numeric = false;
      }
    }
    (numeric ? p.n_numeric : p.n_categorical)++;
  }
  const std::size_t cells = p.n_instances * p.n_features;
  p.pct_missing = cells == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(cells);

  std::vector<std::string> labels;
  std::vector<double> values;
  bool target_numeric = true;
  for (const auto& row : table.rows) {
    const auto& cell = row[target_col];
    if (is_missing(cell)) continue;
    labels.push_back(cell);
    if (auto x = parse_number(cell)) {
      values.push_back(*x);
    } else {
      target_numeric = false;
    }
  }
  if (labels.empty()) throw ProfileError("target column '" + target + "' is entirely missing");

  std::set<double> distinct(values.begin(), values.end());
  bool categorical = !target_numeric || distinct.size() <= options.categorical_threshold;
  if (categorical) {
    p.target_type = TargetType::kCategorical;
    std::map<std::string, std::size_t> counts;
    if (target_numeric) {
      // Numeric labels: "1" and "1.0" are the same class.
      for (double x : values) ++counts[format_real(x)];
    } else {
      for (const auto& l : labels) ++counts[l];
    }
    std::size_t hi = 0, lo = SIZE_MAX;
    for (const auto& [label, n] : counts) {
      hi = std::max(hi, n);
      lo = std::min(lo, n);
    }
    p.n_classes = counts.size();
    p.imbalance = static_cast<double>(hi) / static_cast<double>(lo);
  } else {
    p.target_type = TargetType::kNumerical;
    double mean = 0.0;
    for (double x : values) mean += x;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    p.std_target = std::sqrt(ss / static_cast<double>(values.size()));
  }
  return p;
}

DatasetProfile profile(const std::filesystem::path& file, const std::string& target,
                       const ProfileOptions& options) {
  std::ifstream in(file);
  if (!in) throw ProfileError("cannot open " + file.string());
  return profile(read_table(in, options.delimiter), target, file.stem().string(), options);
}

std::string dataset_iri(std::string_view name) { return "dataset/" + sanitize(name); }

std::vector<Triple> profile_triples(const DatasetProfile& p) {
  p.check();
  const Term d = Term::iri(dataset_iri(p.name));
  auto t = [&](std::string_view rel, Term o) { return Triple{d, iri_term(rel), std::move(o)}; };
  auto count = [](std::size_t n) { return Term::integer(static_cast<std::int64_t>(n)); };
  std::vector<Triple> out = {
      t(v::kType, iri_term(v::kDataset)),
      t(v::kDatasetName, Term::string(p.name)),
      t(v::kNumInstances, count(p.n_instances)),
      t(v::kNumFeatures, count(p.n_features)),
      t(v::kNumNumericFeatures, count(p.n_numeric)),
      t(v::kNumCategoricalFeatures, count(p.n_categorical)),
      t(v::kPctMissing, Term::real(p.pct_missing)),
      t(v::kTargetType, Term::string(std::string(target_type_name(p.target_type)))),
  };
  if (p.n_classes) out.push_back(t(v::kNumClasses, count(*p.n_classes)));
  if (p.imbalance) out.push_back(t(v::kTargetImbalance, Term::real(*p.imbalance)));
  if (p.std_target) out.push_back(t(v::kTargetStd, Term::real(*p.std_target)));
  return out;
}

Term annotate(Graph& g, const DatasetProfile& p, const Schema& schema) {
  auto triples = profile_triples(p);
  Graph staged = g;
  for (const auto& t : triples) staged.add(t);
  for (const auto& t : triples) {
    if (auto viol = validate(schema, staged, t)) {
      throw std::invalid_argument("dataset annotation rejected: " + viol->message);
    }
  }
  for (const auto& t : triples) g.add(t);
  return triples.front().subject;
}

std::optional<DatasetProfile> read_profile(const Graph& g, const Term& dataset) {
  auto get = [&](std::string_view rel) { return g.object(dataset, iri_term(rel)); };
  auto name = get(v::kDatasetName);
  auto type = get(v::kTargetType);
  if (!name || !type) return std::nullopt;
  auto num = [&](std::string_view rel) -> std::optional<double> {
    auto o = get(rel);
    return o ? o->numeric() : std::nullopt;
  };
  DatasetProfile p;
  p.name = name->value();
  p.target_type = type->value() == "numerical" ? TargetType::kNumerical : TargetType::kCategorical;
  p.n_instances = static_cast<std::size_t>(num(v::kNumInstances).value_or(0));
  p.n_features = static_cast<std::size_t>(num(v::kNumFeatures).value_or(0));
  p.n_numeric = static_cast<std::size_t>(num(v::kNumNumericFeatures).value_or(0));
  p.n_categorical = static_cast<std::size_t>(num(v::kNumCategoricalFeatures).value_or(0));
  p.pct_missing = num(v::kPctMissing).value_or(0.0);
  if (auto n = num(v::kNumClasses)) p.n_classes = static_cast<std::size_t>(*n);
  p.imbalance = num(v::kTargetImbalance);
  p.std_target = num(v::kTargetStd);
  return p;
}

}  // namespace kgintent
