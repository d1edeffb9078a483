#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/schema.hpp"

namespace kgintent {

enum class TargetType : std::uint8_t { kCategorical, kNumerical };

std::string_view target_type_name(TargetType t);

// Dataset-level metafeatures. Class-count and imbalance are populated only for
// categorical targets; the target deviation only for numerical ones.
struct DatasetProfile {
  std::string name;
  std::size_t n_instances = 0;
  std::size_t n_features = 0;
  std::size_t n_numeric = 0;
  std::size_t n_categorical = 0;
  double pct_missing = 0.0;
  TargetType target_type = TargetType::kCategorical;
  std::optional<std::size_t> n_classes;
  std::optional<double> imbalance;
  std::optional<double> std_target;

  // Number of populated fields, the name included.
  std::size_t populated_fields() const;
  // Throws std::invalid_argument when an invariant is violated.
  void check() const;

  friend bool operator==(const DatasetProfile&, const DatasetProfile&) = default;
};

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProfileOptions {
  char delimiter = ',';
  // Numeric targets with at most this many distinct values count as categorical.
  std::size_t categorical_threshold = 10;
};

// A parsed delimited table: header plus rows of raw cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(std::istream& in, char delimiter);

DatasetProfile profile(const Table& table, const std::string& target, const std::string& name,
                       const ProfileOptions& options = {});
DatasetProfile profile(const std::filesystem::path& file, const std::string& target,
                       const ProfileOptions& options = {});

bool is_missing(std::string_view cell);

// IRI of the Dataset entity for a given dataset name.
std::string dataset_iri(std::string_view name);

// Triples describing the profile (one type triple plus one per populated field).
std::vector<Triple> profile_triples(const DatasetProfile& p);

// Adds the dataset entity and its characteristics, validating each triple.
// Returns the dataset IRI. Re-annotating the same name reuses the entity.
Term annotate(Graph& g, const DatasetProfile& p, const Schema& schema = Schema::data_analytics());

// Reads a profile back from the characteristic triples of a dataset entity.
std::optional<DatasetProfile> read_profile(const Graph& g, const Term& dataset);

}  // namespace kgintent
