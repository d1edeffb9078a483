#include "kgintent/schema.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <stdexcept>

#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;

namespace {

struct AlgorithmSpec {
  const char* name;
  const char* family;
  std::vector<const char*> tasks;
  const char* implementation;
};

// Curated DMOP-style subset. Preprocessors serve every predictive task so they
// can appear as constraints for either intent.
const std::vector<AlgorithmSpec>& algorithm_table() {
  static const std::vector<AlgorithmSpec> table = {
      {"SVC", "SupportVectorAlgorithm", {"Classification"}, "sklearn.svm.SVC"},
      {"KNeighborsClassifier", "NearestNeighborAlgorithm", {"Classification"},
       "sklearn.neighbors.KNeighborsClassifier"},
      {"LogisticRegression", "LinearModelAlgorithm", {"Classification"},
       "sklearn.linear_model.LogisticRegression"},
      {"RandomForest", "TreeEnsembleAlgorithm", {"Classification"},
       "sklearn.ensemble.RandomForestClassifier"},
      {"DecisionTreeClassifier", "TreeAlgorithm", {"Classification"},
       "sklearn.tree.DecisionTreeClassifier"},
      {"GaussianNB", "BayesianAlgorithm", {"Classification"}, "sklearn.naive_bayes.GaussianNB"},
      {"GradientBoostingClassifier", "TreeEnsembleAlgorithm", {"Classification"},
       "sklearn.ensemble.GradientBoostingClassifier"},
      {"MLPClassifier", "NeuralNetworkAlgorithm", {"Classification"},
       "sklearn.neural_network.MLPClassifier"},
      {"SVR", "SupportVectorAlgorithm", {"Regression"}, "sklearn.svm.SVR"},
      {"SGDRegressor", "LinearModelAlgorithm", {"Regression"},
       "sklearn.linear_model.SGDRegressor"},
      {"KNeighborsRegressor", "NearestNeighborAlgorithm", {"Regression"},
       "sklearn.neighbors.KNeighborsRegressor"},
      {"MLPRegressor", "NeuralNetworkAlgorithm", {"Regression"},
       "sklearn.neural_network.MLPRegressor"},
      {"RandomForestRegressor", "TreeEnsembleAlgorithm", {"Regression"},
       "sklearn.ensemble.RandomForestRegressor"},
      {"LinearRegression", "LinearModelAlgorithm", {"Regression", "Analyze"},
       "sklearn.linear_model.LinearRegression"},
      {"Ridge", "LinearModelAlgorithm", {"Regression"}, "sklearn.linear_model.Ridge"},
      {"Lasso", "LinearModelAlgorithm", {"Regression"}, "sklearn.linear_model.Lasso"},
      {"DecisionTreeRegressor", "TreeAlgorithm", {"Regression"},
       "sklearn.tree.DecisionTreeRegressor"},
      {"GradientBoostingRegressor", "TreeEnsembleAlgorithm", {"Regression"},
       "sklearn.ensemble.GradientBoostingRegressor"},
      {"KMeans", "ClusteringAlgorithm", {"Clustering"}, "sklearn.cluster.KMeans"},
      {"DBSCAN", "ClusteringAlgorithm", {"Clustering"}, "sklearn.cluster.DBSCAN"},
      {"AgglomerativeClustering", "ClusteringAlgorithm", {"Clustering"},
       "sklearn.cluster.AgglomerativeClustering"},
      {"PCA", "DimensionalityReduction", {"Classification", "Regression", "Clustering", "Summarize"},
       "sklearn.decomposition.PCA"},
      {"Normalizer", "FeatureTransformation", {"Classification", "Regression", "Clustering"},
       "sklearn.preprocessing.Normalizer"},
      {"StandardScaler", "FeatureTransformation", {"Classification", "Regression", "Clustering"},
       "sklearn.preprocessing.StandardScaler"},
      {"MinMaxScaler", "FeatureTransformation", {"Classification", "Regression", "Clustering"},
       "sklearn.preprocessing.MinMaxScaler"},
      {"NoPreprocessing", "PreprocessingAlgorithm", {"Classification", "Regression", "Clustering"},
       "passthrough"},
      {"KFoldCrossValidation", "ValidationProcedure", {"Validate"},
       "sklearn.model_selection.KFold"},
  };
  return table;
}

bool is_meta_relation(std::string_view r) {
  return r == v::kSubClassOf || r == v::kSubPropertyOf || r == v::kDomain || r == v::kRange;
}

bool is_meta_class(std::string_view c) {
  return c == v::kOwlClass || c == v::kObjectProperty || c == v::kDatatypeProperty ||
         c == v::kFunctionalProperty;
}

std::string datatype_iri(Datatype dt) { return "xsd:" + std::string(datatype_name(dt)); }

}  // namespace

std::string_view level_name(IntentLevel level) {
  switch (level) {
    case IntentLevel::kIntent: return "intent";
    case IntentLevel::kMLTask: return "ml_task";
    case IntentLevel::kAlgorithm: return "algorithm";
    case IntentLevel::kImplementation: return "implementation";
  }
  return "intent";
}

std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kUnknownRelation: return "unknown_relation";
    case ViolationKind::kUnknownClass: return "unknown_class";
    case ViolationKind::kDomainMismatch: return "domain_mismatch";
    case ViolationKind::kRangeMismatch: return "range_mismatch";
    case ViolationKind::kFunctionalDuplicate: return "functional_duplicate";
  }
  return "unknown_relation";
}

Schema::Schema() {
  auto cls = [&](std::string_view iri, std::optional<std::string_view> super = std::nullopt) {
    classes_.push_back({std::string(iri), super ? std::optional<std::string>(*super) : std::nullopt});
  };
  cls(v::kTask);
  cls(v::kUser);
  cls(v::kIntent);
  cls(v::kMLTask, v::kIntent);
  cls(v::kWorkflow);
  cls(v::kDataset);
  cls(v::kStep);
  cls(v::kAlgorithm);
  cls("SupportVectorAlgorithm", v::kAlgorithm);
  cls("NearestNeighborAlgorithm", v::kAlgorithm);
  cls("LinearModelAlgorithm", v::kAlgorithm);
  cls("TreeAlgorithm", v::kAlgorithm);
  cls("TreeEnsembleAlgorithm", "TreeAlgorithm");
  cls("BayesianAlgorithm", v::kAlgorithm);
  cls("NeuralNetworkAlgorithm", v::kAlgorithm);
  cls("ClusteringAlgorithm", v::kAlgorithm);
  cls("ValidationProcedure", v::kAlgorithm);
  cls("PreprocessingAlgorithm", v::kAlgorithm);
  cls("FeatureTransformation", "PreprocessingAlgorithm");
  cls("DimensionalityReduction", "PreprocessingAlgorithm");
  cls(v::kImplementation);
  cls(v::kHyperparameter);
  cls(v::kConstraint);
  cls(v::kAlgorithmConstraint, v::kConstraint);
  cls(v::kHyperparameterConstraint, v::kConstraint);
  cls(v::kWorkflowConstraint, v::kConstraint);
  cls(v::kEvaluationRequirement);
  cls(v::kModelEvaluation);
  cls(v::kFeedback);
  cls(v::kDatasetCharacteristics);
  for (std::size_t i = 0; i < classes_.size(); ++i) class_index_[classes_[i].iri] = i;

  auto prop = [&](std::string_view iri, std::string_view domain, PropertyRange range,
                  bool functional) {
    properties_.push_back({std::string(iri), std::string(domain), std::move(range), functional});
  };
  auto c = [](std::string_view s) { return PropertyRange(std::string(s)); };
  prop(v::kRequestedBy, v::kTask, c(v::kUser), true);
  prop(v::kUsesDataset, v::kTask, c(v::kDataset), true);
  prop(v::kHasIntent, v::kTask, c(v::kIntent), true);
  prop(v::kHasRequirement, v::kTask, c(v::kEvaluationRequirement), false);
  prop(v::kHasConstraint, v::kTask, c(v::kConstraint), false);
  prop(v::kAchievedBy, v::kTask, c(v::kWorkflow), true);
  prop(v::kHasStep, v::kWorkflow, c(v::kStep), false);
  prop(v::kFollowedBy, v::kStep, c(v::kStep), false);
  prop(v::kUsesAlgorithm, v::kStep, c(v::kAlgorithm), true);
  prop(v::kHasHyperparameter, v::kAlgorithm, c(v::kHyperparameter), false);
  prop(v::kHasEvaluation, v::kWorkflow, c(v::kModelEvaluation), true);
  prop(v::kEvaluatesMetric, v::kModelEvaluation, c(v::kEvaluationRequirement), true);
  prop(v::kScoreValue, v::kModelEvaluation, Datatype::kFloat, true);
  prop(v::kHasFeedback, v::kWorkflow, c(v::kFeedback), true);
  prop(v::kFeedbackScore, v::kFeedback, Datatype::kInteger, true);
  prop(v::kFeedbackTag, v::kFeedback, Datatype::kString, false);
  prop(v::kIsHard, v::kConstraint, Datatype::kBoolean, true);
  prop(v::kOnAlgorithm, v::kAlgorithmConstraint, c(v::kAlgorithm), true);
  prop(v::kConstraintAction, v::kAlgorithmConstraint, Datatype::kString, true);
  prop(v::kOnHyperparameter, v::kHyperparameterConstraint, c(v::kHyperparameter), true);
  prop(v::kComparator, v::kHyperparameterConstraint, Datatype::kString, true);
  prop(v::kConstraintValue, v::kConstraint, Datatype::kFloat, true);
  prop(v::kOnResource, v::kWorkflowConstraint, Datatype::kString, true);
  prop(v::kSuitableFor, v::kEvaluationRequirement, c(v::kIntent), false);
  prop(v::kHasExpertise, v::kUser, Datatype::kString, true);
  prop(v::kHasTrait, v::kAlgorithm, Datatype::kString, false);
  prop(v::kHasCharacteristic, v::kDataset, c(v::kDatasetCharacteristics), false);
  prop(v::kSubIntentOf, v::kMLTask, c(v::kIntent), true);
  prop(v::kAddressesTask, v::kAlgorithm, c(v::kMLTask), false);
  prop(v::kImplements, v::kImplementation, c(v::kAlgorithm), false);
  prop(v::kDatasetName, v::kDataset, Datatype::kString, true);
  prop(v::kNumInstances, v::kDataset, Datatype::kInteger, true);
  prop(v::kNumFeatures, v::kDataset, Datatype::kInteger, true);
  prop(v::kNumNumericFeatures, v::kDataset, Datatype::kInteger, true);
  prop(v::kNumCategoricalFeatures, v::kDataset, Datatype::kInteger, true);
  prop(v::kPctMissing, v::kDataset, Datatype::kFloat, true);
  prop(v::kTargetType, v::kDataset, Datatype::kString, true);
  prop(v::kNumClasses, v::kDataset, Datatype::kInteger, true);
  prop(v::kTargetImbalance, v::kDataset, Datatype::kFloat, true);
  prop(v::kTargetStd, v::kDataset, Datatype::kFloat, true);
  for (std::size_t i = 0; i < properties_.size(); ++i) property_index_[properties_[i].iri] = i;

  // Intent hierarchy: five roots, their ML tasks, algorithms, implementations.
  for (const char* root : {"Describe", "Assess", "Explain", "Predict", "Suggest"}) {
    nodes_.push_back({root, IntentLevel::kIntent, {}, std::string(v::kIntent)});
  }
  const std::vector<std::pair<const char*, const char*>> tasks = {
      {"Classification", "Predict"}, {"Regression", "Predict"}, {"Forecasting", "Predict"},
      {"Clustering", "Describe"},    {"Summarize", "Explain"},  {"Analyze", "Explain"},
      {"Validate", "Assess"},        {"Compare", "Assess"},
  };
  for (const auto& [task, root] : tasks) {
    nodes_.push_back({task, IntentLevel::kMLTask, {root}, std::string(v::kMLTask)});
  }
  for (const auto& a : algorithm_table()) {
    IntentNode n{a.name, IntentLevel::kAlgorithm, {}, a.family};
    for (const char* t : a.tasks) n.parents.emplace_back(t);
    nodes_.push_back(std::move(n));
  }
  for (const auto& a : algorithm_table()) {
    nodes_.push_back({a.implementation, IntentLevel::kImplementation, {a.name},
                      std::string(v::kImplementation)});
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_[nodes_[i].iri] = i;

  metrics_ = {
      {"Accuracy", {"Classification"}, true, 0.0, 1.0},
      {"F1-Score", {"Classification"}, true, 0.0, 1.0},
      {"AUC", {"Classification"}, true, 0.5, 1.0},
      {"Precision", {"Classification"}, true, 0.0, 1.0},
      {"Recall", {"Classification"}, true, 0.0, 1.0},
      {"R2", {"Regression"}, true, -1.0, 1.0},
      {"MSE", {"Regression"}, false, 0.0, 100.0},
      {"RMSE", {"Regression", "Forecasting"}, false, 0.0, 10.0},
      {"MAE", {"Regression", "Forecasting"}, false, 0.0, 10.0},
      {"Silhouette", {"Clustering"}, true, -1.0, 1.0},
  };

  hyperparameters_ = {
      {"SVC", "SVC.C"},
      {"SVC", "SVC.kernel"},
      {"SVR", "SVR.C"},
      {"SVR", "SVR.epsilon"},
      {"RandomForest", "RandomForest.n_estimators"},
      {"RandomForest", "RandomForest.max_depth"},
      {"RandomForestRegressor", "RandomForestRegressor.n_estimators"},
      {"KNeighborsClassifier", "KNeighborsClassifier.n_neighbors"},
      {"KNeighborsRegressor", "KNeighborsRegressor.n_neighbors"},
      {"LogisticRegression", "LogisticRegression.C"},
      {"MLPClassifier", "MLPClassifier.hidden_layer_sizes"},
      {"MLPRegressor", "MLPRegressor.hidden_layer_sizes"},
      {"KMeans", "KMeans.n_clusters"},
      {"PCA", "PCA.n_components"},
  };
  traits_ = {
      {"RandomForest", "HandlesCategoricalFeatures"},
      {"RandomForest", "ToleratesIrrelevantFeatures"},
      {"DecisionTreeClassifier", "HandlesCategoricalFeatures"},
      {"LogisticRegression", "EagerPolicyLearning"},
      {"LogisticRegression", "HandlesBinaryClassification"},
      {"LogisticRegression", "HandlesContinuousFeatures"},
  };

  topological_classes();  // rejects cycles at construction
}

const Schema& Schema::data_analytics() {
  static const Schema schema;
  return schema;
}

const ClassDef* Schema::find_class(std::string_view iri) const {
  auto it = class_index_.find(iri);
  return it == class_index_.end() ? nullptr : &classes_[it->second];
}

const PropertyDef* Schema::find_property(std::string_view iri) const {
  auto it = property_index_.find(iri);
  return it == property_index_.end() ? nullptr : &properties_[it->second];
}

const IntentNode* Schema::find_node(std::string_view iri) const {
  auto it = node_index_.find(iri);
  return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const Metric* Schema::find_metric(std::string_view iri) const {
  for (const auto& m : metrics_) {
    if (m.iri == iri) return &m;
  }
  return nullptr;
}

bool Schema::is_subclass(std::string_view sub, std::string_view super) const {
  const ClassDef* c = find_class(sub);
  std::size_t guard = 0;
  while (c && guard++ <= classes_.size()) {
    if (c->iri == super) return true;
    if (!c->superclass) return false;
    c = find_class(*c->superclass);
  }
  return false;
}

std::set<std::string> Schema::algorithms_for(std::string_view node) const {
  std::set<std::string> out;
  const IntentNode* n = find_node(node);
  if (!n) return out;
  if (n->level == IntentLevel::kAlgorithm) {
    out.insert(n->iri);
    return out;
  }
  if (n->level == IntentLevel::kImplementation) return out;
  std::set<std::string> scope{n->iri};
  if (n->level == IntentLevel::kIntent) {
    for (const auto& m : nodes_) {
      if (m.level == IntentLevel::kMLTask && m.parents.front() == n->iri) scope.insert(m.iri);
    }
  }
  for (const auto& m : nodes_) {
    if (m.level != IntentLevel::kAlgorithm) continue;
    for (const auto& p : m.parents) {
      if (scope.count(p)) out.insert(m.iri);
    }
  }
  return out;
}

std::set<std::string> Schema::ml_tasks_for(std::string_view algorithm) const {
  std::set<std::string> out;
  const IntentNode* n = find_node(algorithm);
  if (!n || n->level != IntentLevel::kAlgorithm) return out;
  out.insert(n->parents.begin(), n->parents.end());
  return out;
}

std::set<std::string> Schema::intents_for(std::string_view node) const {
  std::set<std::string> out;
  const IntentNode* n = find_node(node);
  if (!n) return out;
  std::deque<const IntentNode*> frontier{n};
  while (!frontier.empty()) {
    const IntentNode* cur = frontier.front();
    frontier.pop_front();
    if (cur->level == IntentLevel::kIntent) {
      if (cur != n) out.insert(cur->iri);
      continue;
    }
    for (const auto& p : cur->parents) {
      if (const IntentNode* pn = find_node(p)) frontier.push_back(pn);
    }
  }
  return out;
}

std::set<std::string> Schema::metrics_for(std::string_view intent) const {
  std::set<std::string> tasks;
  const IntentNode* n = find_node(intent);
  if (!n) return {};
  if (n->level == IntentLevel::kMLTask) {
    tasks.insert(n->iri);
  } else if (n->level == IntentLevel::kIntent) {
    for (const auto& m : nodes_) {
      if (m.level == IntentLevel::kMLTask && m.parents.front() == n->iri) tasks.insert(m.iri);
    }
  }
  std::set<std::string> out;
  for (const auto& m : metrics_) {
    for (const auto& t : m.suitable_for) {
      if (tasks.count(t)) out.insert(m.iri);
    }
  }
  return out;
}

bool Schema::is_preprocessor(std::string_view algorithm) const {
  const IntentNode* n = find_node(algorithm);
  return n && n->level == IntentLevel::kAlgorithm && is_subclass(n->type, "PreprocessingAlgorithm");
}

std::set<std::string> Schema::nodes_at(IntentLevel level) const {
  std::set<std::string> out;
  for (const auto& n : nodes_) {
    if (n.level == level) out.insert(n.iri);
  }
  return out;
}

std::vector<std::string> Schema::topological_classes() const {
  std::map<std::string, int> state;  // 0 new, 1 visiting, 2 done
  std::vector<std::string> order;
  std::function<void(const ClassDef&)> visit = [&](const ClassDef& c) {
    int& s = state[c.iri];
    if (s == 2) return;
    if (s == 1) throw std::logic_error("subclass cycle through " + c.iri);
    s = 1;
    if (c.superclass) {
      const ClassDef* p = find_class(*c.superclass);
      if (!p) throw std::logic_error("undeclared superclass " + *c.superclass);
      visit(*p);
    }
    state[c.iri] = 2;
    order.push_back(c.iri);
  };
  for (const auto& c : classes_) visit(c);
  return order;
}

Graph Schema::to_graph() const {
  Graph g;
  auto add = [&](std::string_view s, std::string_view r, const Term& o) {
    g.add({Term::iri(std::string(s)), Term::iri(std::string(r)), o});
  };
  auto add_iri = [&](std::string_view s, std::string_view r, std::string_view o) {
    add(s, r, iri_term(o));
  };
  for (const auto& c : classes_) {
    add_iri(c.iri, v::kType, v::kOwlClass);
    if (c.superclass) add_iri(c.iri, v::kSubClassOf, *c.superclass);
  }
  for (const auto& p : properties_) {
    bool object_prop = std::holds_alternative<std::string>(p.range);
    add_iri(p.iri, v::kType, object_prop ? v::kObjectProperty : v::kDatatypeProperty);
    add_iri(p.iri, v::kDomain, p.domain);
    add_iri(p.iri, v::kRange,
            object_prop ? std::get<std::string>(p.range) : datatype_iri(std::get<Datatype>(p.range)));
    if (p.functional) add_iri(p.iri, v::kType, v::kFunctionalProperty);
  }
  for (const auto& n : nodes_) {
    add_iri(n.iri, v::kType, n.type);
    for (const auto& parent : n.parents) {
      switch (n.level) {
        case IntentLevel::kMLTask: add_iri(n.iri, v::kSubIntentOf, parent); break;
        case IntentLevel::kAlgorithm: add_iri(n.iri, v::kAddressesTask, parent); break;
        case IntentLevel::kImplementation: add_iri(n.iri, v::kImplements, parent); break;
        case IntentLevel::kIntent: break;
      }
    }
  }
  for (const auto& m : metrics_) {
    add_iri(m.iri, v::kType, v::kEvaluationRequirement);
    for (const auto& t : m.suitable_for) add_iri(m.iri, v::kSuitableFor, t);
  }
  for (const auto& [alg, hp] : hyperparameters_) {
    add_iri(hp, v::kType, v::kHyperparameter);
    add_iri(alg, v::kHasHyperparameter, hp);
  }
  for (const auto& [alg, trait] : traits_) add(alg, v::kHasTrait, Term::string(trait));
  return g;
}

Graph bootstrap_schema() { return Schema::data_analytics().to_graph(); }

std::optional<Violation> validate(const Schema& schema, const Graph& g, const Triple& t) {
  const std::string& rel = t.relation.value();
  const Term type = iri_term(v::kType);
  if (rel == v::kType) {
    if (!t.object.is_iri() ||
        (!schema.find_class(t.object.value()) && !is_meta_class(t.object.value()))) {
      return Violation{ViolationKind::kUnknownClass,
                       "rdf:type object " + t.object.to_string() + " is not a declared class"};
    }
    return std::nullopt;
  }
  if (is_meta_relation(rel)) {
    if (!t.object.is_iri()) {
      return Violation{ViolationKind::kRangeMismatch, rel + " expects an IRI object"};
    }
    return std::nullopt;
  }
  const PropertyDef* p = schema.find_property(rel);
  if (!p) return Violation{ViolationKind::kUnknownRelation, "undeclared relation " + rel};

  auto conforms = [&](const Term& e, const std::string& cls) {
    for (const auto& ty : g.objects(e, type)) {
      if (ty.is_iri() && schema.is_subclass(ty.value(), cls)) return true;
    }
    return false;
  };
  if (!conforms(t.subject, p->domain)) {
    return Violation{ViolationKind::kDomainMismatch,
                     t.subject.value() + " is not a " + p->domain + " (domain of " + rel + ")"};
  }
  if (const auto* cls = std::get_if<std::string>(&p->range)) {
    if (!t.object.is_iri() || !conforms(t.object, *cls)) {
      return Violation{ViolationKind::kRangeMismatch,
                       t.object.to_string() + " is not a " + *cls + " (range of " + rel + ")"};
    }
  } else {
    Datatype want = std::get<Datatype>(p->range);
    bool ok = t.object.is_literal() &&
              (t.object.datatype() == want ||
               (want == Datatype::kFloat && t.object.datatype() == Datatype::kInteger));
    if (!ok) {
      return Violation{ViolationKind::kRangeMismatch,
                       t.object.to_string() + " is not a " + std::string(datatype_name(want)) +
                           " literal (range of " + rel + ")"};
    }
  }
  if (p->functional) {
    for (const auto& o : g.objects(t.subject, t.relation)) {
      if (o != t.object) {
        return Violation{ViolationKind::kFunctionalDuplicate,
                         rel + " is functional but " + t.subject.value() + " already has " +
                             o.to_string()};
      }
    }
  }
  return std::nullopt;
}

std::vector<std::pair<Triple, Violation>> validate_all(const Schema& schema, const Graph& g) {
  std::vector<std::pair<Triple, Violation>> out;
  for (const auto& t : g.triples()) {
    if (auto viol = validate(schema, g, t)) out.emplace_back(t, *viol);
  }
  return out;
}

}  // namespace kgintent
