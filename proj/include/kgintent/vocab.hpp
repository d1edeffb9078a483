#pragma once

#include <string_view>

// IRIs of the data-analytics vocabulary shared by every module.
namespace kgintent::vocab {

inline constexpr std::string_view kType = "rdf:type";
inline constexpr std::string_view kSubClassOf = "rdfs:subClassOf";
inline constexpr std::string_view kSubPropertyOf = "rdfs:subPropertyOf";
inline constexpr std::string_view kDomain = "rdfs:domain";
inline constexpr std::string_view kRange = "rdfs:range";
inline constexpr std::string_view kOwlClass = "owl:Class";
inline constexpr std::string_view kObjectProperty = "owl:ObjectProperty";
inline constexpr std::string_view kDatatypeProperty = "owl:DatatypeProperty";
inline constexpr std::string_view kFunctionalProperty = "owl:FunctionalProperty";

// Classes.
inline constexpr std::string_view kTask = "Task";
inline constexpr std::string_view kUser = "User";
inline constexpr std::string_view kIntent = "Intent";
inline constexpr std::string_view kMLTask = "MLTask";
inline constexpr std::string_view kWorkflow = "Workflow";
inline constexpr std::string_view kDataset = "Dataset";
inline constexpr std::string_view kStep = "Step";
inline constexpr std::string_view kAlgorithm = "Algorithm";
inline constexpr std::string_view kImplementation = "Implementation";
inline constexpr std::string_view kHyperparameter = "Hyperparameter";
inline constexpr std::string_view kConstraint = "Constraint";
inline constexpr std::string_view kAlgorithmConstraint = "AlgorithmConstraint";
inline constexpr std::string_view kHyperparameterConstraint = "HyperparameterConstraint";
inline constexpr std::string_view kWorkflowConstraint = "WorkflowConstraint";
inline constexpr std::string_view kEvaluationRequirement = "EvaluationRequirement";
inline constexpr std::string_view kModelEvaluation = "ModelEvaluation";
inline constexpr std::string_view kFeedback = "Feedback";
inline constexpr std::string_view kDatasetCharacteristics = "DatasetCharacteristics";

// Interaction properties.
inline constexpr std::string_view kRequestedBy = "requestedBy";
inline constexpr std::string_view kUsesDataset = "usesDataset";
inline constexpr std::string_view kHasIntent = "hasIntent";
inline constexpr std::string_view kHasRequirement = "hasRequirement";
inline constexpr std::string_view kHasConstraint = "hasConstraint";
inline constexpr std::string_view kAchievedBy = "achievedBy";
inline constexpr std::string_view kHasStep = "hasStep";
inline constexpr std::string_view kFollowedBy = "followedBy";
inline constexpr std::string_view kUsesAlgorithm = "usesAlgorithm";
inline constexpr std::string_view kHasHyperparameter = "hasHyperparameter";
inline constexpr std::string_view kHasEvaluation = "hasEvaluation";
inline constexpr std::string_view kEvaluatesMetric = "evaluatesMetric";
inline constexpr std::string_view kScoreValue = "scoreValue";
inline constexpr std::string_view kHasFeedback = "hasFeedback";
inline constexpr std::string_view kFeedbackScore = "feedbackScore";
inline constexpr std::string_view kFeedbackTag = "feedbackTag";
inline constexpr std::string_view kIsHard = "isHard";
inline constexpr std::string_view kOnAlgorithm = "onAlgorithm";
inline constexpr std::string_view kConstraintAction = "constraintAction";
inline constexpr std::string_view kOnHyperparameter = "onHyperparameter";
inline constexpr std::string_view kComparator = "comparator";
inline constexpr std::string_view kConstraintValue = "constraintValue";
inline constexpr std::string_view kOnResource = "onResource";
inline constexpr std::string_view kSuitableFor = "suitableFor";
inline constexpr std::string_view kHasExpertise = "hasExpertise";
inline constexpr std::string_view kHasTrait = "hasTrait";
inline constexpr std::string_view kHasCharacteristic = "hasCharacteristic";

// Intent hierarchy links (child -> parent).
inline constexpr std::string_view kSubIntentOf = "subIntentOf";
inline constexpr std::string_view kAddressesTask = "addressesTask";
inline constexpr std::string_view kImplements = "implements";

// Dataset characteristics.
inline constexpr std::string_view kDatasetName = "datasetName";
inline constexpr std::string_view kNumInstances = "numInstances";
inline constexpr std::string_view kNumFeatures = "numFeatures";
inline constexpr std::string_view kNumNumericFeatures = "numNumericFeatures";
inline constexpr std::string_view kNumCategoricalFeatures = "numCategoricalFeatures";
inline constexpr std::string_view kPctMissing = "pctMissing";
inline constexpr std::string_view kTargetType = "targetType";
inline constexpr std::string_view kNumClasses = "numClasses";
inline constexpr std::string_view kTargetImbalance = "targetImbalance";
inline constexpr std::string_view kTargetStd = "targetStd";

// Frequently referenced individuals.
inline constexpr std::string_view kClassification = "Classification";
inline constexpr std::string_view kRegression = "Regression";
inline constexpr std::string_view kClustering = "Clustering";
inline constexpr std::string_view kPredict = "Predict";

}  // namespace kgintent::vocab
