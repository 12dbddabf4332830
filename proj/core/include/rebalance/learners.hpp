#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/matrix.hpp"

namespace rebalance {

enum class LearnerKind { Knn, LogisticRegression, DecisionTree, RandomForest, Svm };

const std::vector<LearnerKind>& learner_menu();
std::string to_string(LearnerKind k);
LearnerKind learner_from_string(const std::string& name);

// ---- individual models ------------------------------------------------------

struct KnnModel {
  Matrix train_features;
  std::vector<int> train_labels;
  std::size_t k = 5;
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  MinMaxScaler scaler;  // fitted on the training features
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  int label = 0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
  std::vector<TreeModel> trees;
};

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
};

struct FittedModel {
  std::variant<KnnModel, LogRegModel, TreeModel, ForestModel, LinearSvmModel> model;
  LearnerKind kind = LearnerKind::Knn;
  std::size_t n_features = 0;
};

// ---- the common fit/predict surface -----------------------------------------

FittedModel fit(LearnerKind kind, const Dataset& train, std::uint64_t seed);
std::vector<int> predict(const FittedModel& model, const Matrix& rows);

// ---- direct entry points (tests, svm_smote) ----------------------------------

struct ForestOptions {
  std::size_t n_trees = 100;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0 = floor(sqrt(d)), at least 1
};

TreeModel fit_decision_tree(const Matrix& x, const std::vector<int>& y);
ForestModel fit_random_forest(const Matrix& x, const std::vector<int>& y, std::uint64_t seed,
                              const ForestOptions& options = {});
int predict_tree(const TreeModel& tree, std::span<const double> row);

// Linear soft-margin SVM, hinge loss, trained by deterministic full-batch
// subgradient descent. Internal labels are (-1, +1) mapped from (0, 1).
LinearSvmModel fit_linear_svm(const Matrix& x, const std::vector<int>& y, double c = 1.0,
                              std::size_t epochs = 1000);
double svm_decision(const LinearSvmModel& m, std::span<const double> row);

// indices with functional margin <= 1 (on or inside the margin, or misclassified)
std::vector<std::size_t> svm_support_vectors(const LinearSvmModel& m, const Matrix& x,
                                             const std::vector<int>& y);

}  // namespace rebalance
