#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "kgintent/graph.hpp"

namespace kgintent {

struct ClassDef {
  std::string iri;
  std::optional<std::string> superclass;
};

// Range of a property: a declared class IRI or a literal datatype.
using PropertyRange = std::variant<std::string, Datatype>;

struct PropertyDef {
  std::string iri;
  std::string domain;
  PropertyRange range;
  bool functional = false;
};

enum class IntentLevel : std::uint8_t { kIntent, kMLTask, kAlgorithm, kImplementation };

std::string_view level_name(IntentLevel level);

// A node of the intent hierarchy. Parents point one level up.
struct IntentNode {
  std::string iri;
  IntentLevel level = IntentLevel::kIntent;
  std::vector<std::string> parents;
  std::string type;  // class the node is typed with
};

struct Metric {
  std::string iri;
  std::vector<std::string> suitable_for;  // ML tasks
  bool higher_is_better = true;
  double lo = 0.0;  // natural range of pseudo scores
  double hi = 1.0;
};

enum class ViolationKind : std::uint8_t {
  kUnknownRelation,
  kUnknownClass,
  kDomainMismatch,
  kRangeMismatch,
  kFunctionalDuplicate,
};

std::string_view violation_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

// The hard-coded data-analytics ontology: classes, properties, the intent
// hierarchy and the metric pool. Immutable once built.
class Schema {
 public:
  // Shared bootstrapped instance.
  static const Schema& data_analytics();

  Graph to_graph() const;

  const std::vector<ClassDef>& classes() const { return classes_; }
  const std::vector<PropertyDef>& properties() const { return properties_; }
  const std::vector<IntentNode>& intent_nodes() const { return nodes_; }
  const std::vector<Metric>& metrics() const { return metrics_; }

  const ClassDef* find_class(std::string_view iri) const;
  const PropertyDef* find_property(std::string_view iri) const;
  const IntentNode* find_node(std::string_view iri) const;
  const Metric* find_metric(std::string_view iri) const;

  // Reflexive-transitive subclass test over declared classes.
  bool is_subclass(std::string_view sub, std::string_view super) const;

  // Algorithm-level descendants of an intent, ML task or algorithm node.
  std::set<std::string> algorithms_for(std::string_view node) const;
  // Top-level intents an algorithm (or ML task) ultimately serves.
  std::set<std::string> intents_for(std::string_view node) const;
  // ML tasks an algorithm addresses.
  std::set<std::string> ml_tasks_for(std::string_view algorithm) const;
  // Metrics suitable for an intent node (an ML task, or any task under a root).
  std::set<std::string> metrics_for(std::string_view intent) const;

  // Algorithms whose family is a preprocessing class.
  bool is_preprocessor(std::string_view algorithm) const;

  std::set<std::string> nodes_at(IntentLevel level) const;

  // Classes in topological order (superclass before subclass); throws on cycles.
  std::vector<std::string> topological_classes() const;

 private:
  Schema();
  std::vector<ClassDef> classes_;
  std::vector<PropertyDef> properties_;
  std::vector<IntentNode> nodes_;
  std::vector<Metric> metrics_;
  std::vector<std::pair<std::string, std::string>> hyperparameters_;  // algorithm, hp
  std::vector<std::pair<std::string, std::string>> traits_;           // algorithm, trait
  std::map<std::string, std::size_t, std::less<>> class_index_;
  std::map<std::string, std::size_t, std::less<>> property_index_;
  std::map<std::string, std::size_t, std::less<>> node_index_;
};

// Triples of the bootstrapped schema.
Graph bootstrap_schema();

// Checks t against declared relations, domain/range and functionality. The
// graph supplies rdf:type facts for the subject and object (stage new type
// triples into it first).
std::optional<Violation> validate(const Schema& schema, const Graph& g, const Triple& t);

// Validates every triple of g; returns the failing ones with their violation.
std::vector<std::pair<Triple, Violation>> validate_all(const Schema& schema, const Graph& g);

// Helper for building IRI terms from vocabulary constants.
inline Term iri_term(std::string_view v) { return Term::iri(std::string(v)); }

}  // namespace kgintent
