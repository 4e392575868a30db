#pragma once

// Native binary classifiers behind one train/predict interface: k-nearest
// neighbours, Gaussian naive Bayes, logistic regression trained by SGD,
// CART-style decision tree, random-subspace forest, AdaBoost over stumps,
// and a constant predictor (used as degenerate-training fallback).
//
// All models are deterministic given (spec, seed, data). Absent feature
// values are mean-imputed with means frozen from the training matrix.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "humanal/features.hpp"

namespace humanal {

struct KnnParams {
  int k = 5;
};
struct GaussianNbParams {};
struct LogisticSgdParams {
  double learning_rate = 0.05;
  int epochs = 60;
  double l2 = 1e-4;
};
struct DecisionTreeParams {
  int max_depth = 8;
  int min_leaf = 2;
};
struct RandomForestParams {
  int n_trees = 15;
  int max_depth = 8;
  double feature_subsample = 0.7;  // fraction of features scanned per split
};
struct AdaBoostStumpsParams {
  int n_rounds = 40;
};
struct ConstantParams {
  int label = 1;
};

using ModelKind = std::variant<KnnParams, GaussianNbParams, LogisticSgdParams, DecisionTreeParams,
                               RandomForestParams, AdaBoostStumpsParams, ConstantParams>;

struct ModelSpec {
  ModelKind kind;
  uint64_t seed = 0;

  // Short kind identifier, e.g. "decision_tree".
  std::string kind_name() const;
  // Kind plus hyperparameters, e.g. "knn(k=5)".
  std::string name() const;
  // Throws ConfigError on out-of-range hyperparameters.
  void validate() const;
};

// The default classifier pool used by the calibration pipeline.
std::vector<ModelSpec> default_model_pool();

// --- fitted parameter structures -----------------------------------------

struct TreeNode {
  int feature = -1;        // column index; -1 marks a leaf
  double threshold = 0.0;  // go left when value <= threshold
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;  // class-1 frequency at the leaf
  bool is_leaf() const { return feature < 0; }
};

struct FittedTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct FittedKnn {
  int k = 5;
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};

struct FittedNb {
  double log_prior[2] = {0.0, 0.0};
  std::vector<double> mean[2];
  std::vector<double> var[2];
};

struct FittedSgd {
  std::vector<double> weights;
  double bias = 0.0;
  // Standardization frozen from training data.
  std::vector<double> scale_mean;
  std::vector<double> scale_sd;
};

struct FittedForest {
  std::vector<FittedTree> trees;
};

struct FittedBoost {
  struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1: predict class 1 when value > threshold
    double alpha = 0.0;
  };
  std::vector<Stump> stumps;
  double alpha_sum = 0.0;
};

struct FittedConstant {
  int label = 1;
};

using FittedParams = std::variant<FittedKnn, FittedNb, FittedSgd, FittedTree, FittedForest,
                                  FittedBoost, FittedConstant>;

class TrainedModel {
public:
  TrainedModel(ModelSpec spec, FeatureMask mask, std::vector<Slot> columns,
               std::vector<double> imputation_means, FittedParams params);

  const ModelSpec& spec() const { return spec_; }
  const FeatureMask& mask() const { return mask_; }
  const std::vector<Slot>& columns() const { return columns_; }
  const std::vector<double>& imputation_means() const { return imputation_means_; }
  const FittedParams& params() const { return params_; }

  // Probability of class 1. The caller declares the mask its vector was
  // built with; a mismatch with the training mask throws MaskMismatchError.
  double predict_proba(const FeatureVector& x, const FeatureMask& mask) const;
  int predict(const FeatureVector& x, const FeatureMask& mask, double threshold = 0.5) const;

  // Dense-row variants for matrices produced by featurize_corpus; the
  // matrix columns must equal the training columns.
  double predict_proba_row(const std::vector<double>& row) const;
  std::vector<double> predict_proba_matrix(const FeatureMatrix& matrix) const;
  std::vector<int> predict_matrix(const FeatureMatrix& matrix, double threshold = 0.5) const;

private:
  std::vector<double> imputed(const std::vector<double>& row) const;

  ModelSpec spec_;
  FeatureMask mask_;
  std::vector<Slot> columns_;
  std::vector<double> imputation_means_;
  FittedParams params_;
};

// Trains one model. Requires >= 2 rows and both classes present (KNN
// instead requires >= k rows); throws DegenerateTrainingSetError otherwise.
// The matrix columns must match the mask's enabled slots.
TrainedModel fit(const ModelSpec& spec, const FeatureMatrix& features,
                 const std::vector<int>& labels, const FeatureMask& mask);

// --- model selection -------------------------------------------------------

enum class SelectionMode {
  CrossValidation,  // stratified k-fold on the training set (default)
  TrainAccuracy,    // raw training-set accuracy
};

struct SelectionReport {
  std::vector<std::string> spec_names;
  std::vector<double> mean_accuracy;  // -1 marks a spec that failed to fit
  size_t chosen_index = 0;
  uint64_t fold_seed = 0;
  int folds_used = 0;          // 0 when train-accuracy selection was used
  std::string method;          // "cv", "cv_reduced", "train", "fallback_constant"
};

struct SelectionResult {
  TrainedModel model;
  SelectionReport report;
};

// Picks the best spec by stratified k-fold cross-validation (mean fold
// accuracy; ties go to the lowest index) and refits it on the full data.
// When a class has fewer rows than `folds` the fold count drops to 2, and
// then to plain training accuracy; the report records what ran.
SelectionResult select_model(const std::vector<ModelSpec>& specs, const FeatureMatrix& features,
                             const std::vector<int>& labels, const FeatureMask& mask,
                             int folds, uint64_t seed,
                             SelectionMode mode = SelectionMode::CrossValidation);

// --- serialization ---------------------------------------------------------

nlohmann::ordered_json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

}  // namespace humanal
