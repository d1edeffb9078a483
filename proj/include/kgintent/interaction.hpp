#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/schema.hpp"

namespace kgintent {

struct ConstraintSpec {
  std::string algorithm;
  bool use = true;   // false: the algorithm must not appear
  bool hard = true;  // false: a preference
};

struct Submission {
  std::string user;
  std::string dataset;
  std::string intent;
  std::string metric;
  std::vector<ConstraintSpec> constraints;
  double time_budget = 60.0;  // seconds

  std::string to_json() const;
  static Submission from_json(const std::string& text);
};

struct Evaluation {
  std::string metric;
  double value = 0.0;
};

struct Feedback {
  int score = 3;  // 1..5
  std::vector<std::string> tags;
};

struct InteractionRecord {
  std::string id;  // suffix shared by task/, workflow/, step/, ... IRIs
  Submission submission;
  std::vector<std::string> workflow;  // algorithms in execution order
  Evaluation evaluation;
  std::optional<Feedback> feedback;
};

class InvalidInteraction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContradictoryConstraints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Checks the submission against the schema and the graph: the dataset
// exists, the intent and metric are known and compatible, and each used
// algorithm serves the intent. Throws InvalidInteraction or
// ContradictoryConstraints.
void check_submission(const Schema& schema, const Graph& g, const Submission& sub);

// Adds the task, its constraints, workflow, evaluation and feedback. Every
// triple is validated; on any violation the graph is left unchanged and
// InvalidInteraction is thrown. Returns the triples that were not already
// present.
std::vector<Triple> annotate_interaction(Graph& g, const Schema& schema, const InteractionRecord& rec);

// Attaches feedback to the workflow of an annotated task (same atomicity).
std::vector<Triple> annotate_feedback(Graph& g, const Schema& schema, const std::string& id, const Feedback& fb);

struct ExecutionResult {
  std::vector<std::string> workflow;
  Evaluation evaluation;
};

// Stands in for a workflow generator: submission in, workflow and score out.
using Executor = std::function<ExecutionResult(const Submission&, std::uint64_t seed)>;

// Deterministic pseudo-workflow: used preprocessors, sampled preprocessors,
// then a predictor; used algorithms are present and excluded ones absent.
// The score lies in the metric's natural range.
ExecutionResult stub_execute(const Schema& schema, const Submission& sub, std::uint64_t seed);

}  // namespace kgintent
