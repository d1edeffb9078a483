#pragma once

#include <string>
#include <vector>

#include "kgintent/graph.hpp"
#include "kgintent/kge.hpp"
#include "kgintent/vocab.hpp"

namespace kgintent::fixtures {

// 25 tasks, each with one of 3 intents and one of 5 datasets: 50 triples.
struct ToyKg {
  Vocab entities;
  Vocab relations;
  std::vector<Fact> facts;
  std::vector<std::uint32_t> intents;
  std::vector<std::uint32_t> datasets;
};

inline ToyKg toy_tasks() {
  ToyKg k;
  for (int i = 0; i < 25; ++i) k.entities.add("task" + std::to_string(i));
  for (int i = 0; i < 3; ++i) k.intents.push_back(k.entities.add("intent" + std::to_string(i)));
  for (int i = 0; i < 5; ++i) k.datasets.push_back(k.entities.add("dataset" + std::to_string(i)));
  const auto has_intent = k.relations.add("hasIntent");
  const auto uses_dataset = k.relations.add("usesDataset");
  for (std::uint32_t i = 0; i < 25; ++i) {
    k.facts.push_back({i, has_intent, k.intents[i % 3]});
    k.facts.push_back({i, uses_dataset, k.datasets[(i * 7 + 2) % 5]});
  }
  return k;
}

// Eleven metric-choosing tasks by three users on three datasets. Queried as
// user u1 on dataset D1 with intent Classification, deleting the tasks of
// each stage in turn walks the ladder through levels 1, 2, 3, 4 and then
// runs out of data.
struct LadderStage {
  std::vector<std::string> delete_tasks;  // removed before this stage is queried
  int level;
  std::string top;
  std::size_t count;
};

inline Graph ladder_graph() {
  Graph g;
  auto link = [&](const std::string& s, std::string_view r, const std::string& o) {
    g.add({Term::iri(s), Term::iri(std::string(r)), Term::iri(o)});
  };
  struct Row {
    const char* task;
    const char* user;
    const char* dataset;
    const char* intent;
    const char* metric;
  };
  const Row rows[] = {
      {"t1", "u1", "D1", "Classification", "Accuracy"}, {"t2", "u1", "D1", "Classification", "Accuracy"},
      {"t3", "u1", "D2", "Classification", "F1-Score"}, {"t4", "u1", "D2", "Classification", "F1-Score"},
      {"t5", "u1", "D2", "Classification", "F1-Score"}, {"t6", "u2", "D1", "Classification", "Precision"},
      {"t7", "u2", "D1", "Classification", "Precision"}, {"t8", "u3", "D1", "Classification", "Recall"},
      {"t9", "u2", "D3", "Classification", "AUC"},      {"t10", "u2", "D3", "Classification", "AUC"},
      {"t11", "u3", "D3", "Regression", "MSE"},
  };
  for (const auto& r : rows) {
    const std::string task = std::string("task/") + r.task;
    link(task, vocab::kType, std::string(vocab::kTask));
    link(task, vocab::kRequestedBy, std::string("user/") + r.user);
    link(task, vocab::kUsesDataset, std::string("dataset/") + r.dataset);
    link(task, vocab::kHasIntent, r.intent);
    link(task, vocab::kHasRequirement, r.metric);
  }
  for (const char* u : {"u1", "u2", "u3"}) link(std::string("user/") + u, vocab::kType, std::string(vocab::kUser));
  g.add({Term::iri("user/u1"), Term::iri(std::string(vocab::kHasExpertise)), Term::string("expert")});
  g.add({Term::iri("user/u2"), Term::iri(std::string(vocab::kHasExpertise)), Term::string("novice")});
  g.add({Term::iri("user/u3"), Term::iri(std::string(vocab::kHasExpertise)), Term::string("novice")});
  return g;
}

inline std::vector<LadderStage> ladder_stages() {
  return {
      {{}, 1, "Accuracy", 2},
      {{"t1", "t2"}, 2, "F1-Score", 3},
      {{"t3", "t4", "t5"}, 3, "Precision", 2},
      {{"t6", "t7", "t8"}, 4, "AUC", 2},
      {{"t9", "t10"}, 0, "", 0},
  };
}

// Removes every triple whose subject is task/<id>.
inline void delete_task(Graph& g, const std::string& id) {
  for (const auto& t : g.find(Term::iri("task/" + id), std::nullopt, std::nullopt)) g.remove(t);
}

}  // namespace kgintent::fixtures
