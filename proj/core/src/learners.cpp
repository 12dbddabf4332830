#include "rebalance/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rebalance/errors.hpp"
#include "rebalance/neighbors.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

const std::vector<LearnerKind>& learner_menu() {
  static const std::vector<LearnerKind> menu = {
      LearnerKind::Knn, LearnerKind::LogisticRegression, LearnerKind::DecisionTree,
      LearnerKind::RandomForest, LearnerKind::Svm};
  return menu;
}

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Knn: return "knn";
    case LearnerKind::LogisticRegression: return "logistic_regression";
    case LearnerKind::DecisionTree: return "decision_tree";
    case LearnerKind::RandomForest: return "random_forest";
    case LearnerKind::Svm: return "svm";
  }
  return "?";
}

LearnerKind learner_from_string(const std::string& name) {
  for (LearnerKind k : learner_menu())
    if (to_string(k) == name) return k;
  throw ConfigError("unknown learner: " + name);
}

// ---- decision tree -----------------------------------------------------------

namespace {

int majority_label(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  std::size_t ones = 0;
  for (std::size_t i : idx) ones += static_cast<std::size_t>(y[i]);
  return 2 * ones > idx.size() ? 1 : 0;  // even vote resolves to 0
}

double gini(std::size_t ones, std::size_t n) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(ones) / static_cast<double>(n);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

// Best (feature, threshold) by weighted Gini impurity over candidate
// features. Ties resolve to the lowest feature index, then the lowest
// threshold: features are scanned in ascending order and only strict
// improvements are accepted.
SplitChoice best_split(const Matrix& x, const std::vector<int>& y,
                       const std::vector<std::size_t>& idx,
                       const std::vector<std::size_t>& features) {
  SplitChoice best;
  double best_impurity = std::numeric_limits<double>::infinity();
  const std::size_t n = idx.size();

  std::vector<std::pair<double, int>> col(n);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {x(idx[i], f), y[idx[i]]};
    std::sort(col.begin(), col.end());
    if (col.front().first == col.back().first) continue;  // constant feature

    const std::size_t total_ones =
        static_cast<std::size_t>(std::accumulate(col.begin(), col.end(), 0,
                                                 [](int a, const auto& p) { return a + p.second; }));
    std::size_t left_n = 0, left_ones = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_ones += static_cast<std::size_t>(col[i].second);
      if (col[i].first == col[i + 1].first) continue;
      const double thr = col[i].first + 0.5 * (col[i + 1].first - col[i].first);
      const std::size_t right_n = n - left_n;
      const double impurity =
          (static_cast<double>(left_n) * gini(left_ones, left_n) +
           static_cast<double>(right_n) * gini(total_ones - left_ones, right_n)) /
          static_cast<double>(n);
      if (impurity < best_impurity - 1e-12) {
        best_impurity = impurity;
        best = {static_cast<int>(f), thr, impurity};
      }
    }
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<int>& y, std::size_t max_features, Rng* rng)
      : x_(x), y_(y), max_features_(max_features), rng_(rng) {}

  TreeModel build(std::vector<std::size_t> idx) {
    TreeModel tree;
    grow(tree, std::move(idx));
    return tree;
  }

 private:
  int grow(TreeModel& tree, std::vector<std::size_t> idx) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].label = majority_label(y_, idx);

    const std::size_t ones = static_cast<std::size_t>(
        std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y_[i] == 1; }));
    if (ones == 0 || ones == idx.size() || idx.size() < 2) return node_id;

    const SplitChoice split = best_split(x_, y_, idx, candidate_features());
    if (split.feature < 0) return node_id;  // all candidate features constant

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (x_(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right)
          .push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    const int l = grow(tree, std::move(left));
    tree.nodes[node_id].left = l;
    const int r = grow(tree, std::move(right));
    tree.nodes[node_id].right = r;
    return node_id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(x_.cols());
    std::iota(all.begin(), all.end(), 0);
    if (max_features_ == 0 || max_features_ >= x_.cols() || rng_ == nullptr) return all;
    rng_->shuffle(all);
    all.resize(max_features_);
    std::sort(all.begin(), all.end());
    return all;
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  std::size_t max_features_;
  Rng* rng_;
};

}  // namespace

TreeModel fit_decision_tree(const Matrix& x, const std::vector<int>& y) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  TreeBuilder builder(x, y, 0, nullptr);
  return builder.build(std::move(idx));
}

int predict_tree(const TreeModel& tree, std::span<const double> row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    node = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].label;
}

ForestModel fit_random_forest(const Matrix& x, const std::vector<int>& y, std::uint64_t seed,
                              const ForestOptions& options) {
  ForestModel forest;
  forest.trees.reserve(options.n_trees);
  const std::size_t d = x.cols();
  const std::size_t max_features =
      options.max_features > 0
          ? options.max_features
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

  const Rng root(seed);
  for (std::size_t t = 0; t < options.n_trees; ++t) {
    Rng rng = root.split(t);  // per-tree stream: trees are order-independent
    std::vector<std::size_t> idx(x.rows());
    if (options.bootstrap)
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(x.rows()));
    else
      std::iota(idx.begin(), idx.end(), 0);
    TreeBuilder builder(x, y, max_features >= d ? 0 : max_features, &rng);
    forest.trees.push_back(builder.build(std::move(idx)));
  }
  return forest;
}

// ---- linear SVM ---------------------------------------------------------------

LinearSvmModel fit_linear_svm(const Matrix& x, const std::vector<int>& y, double c,
                              std::size_t epochs) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) throw ConfigError("fit_linear_svm: empty training set");

  // Pegasos-style subgradient descent in a fixed sample order. The bias is
  // folded in as a regularized unit feature and iterates are projected onto
  // the 1/sqrt(lambda) ball, which keeps the early large steps bounded.
  std::vector<double> w(d + 1, 0.0);  // w[d] is the bias weight
  const double lambda = 1.0 / (c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double yi = y[i] == 1 ? 1.0 : -1.0;
      double dec = w[d];
      for (std::size_t j = 0; j < d; ++j) dec += w[j] * x(i, j);
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      if (yi * dec < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * yi * x(i, j);
        w[d] += eta * yi;
      }
      double norm = 0.0;
      for (double v : w) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > radius)
        for (double& v : w) v *= radius / norm;
    }
  }

  LinearSvmModel m;
  m.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
  m.bias = w[d];
  return m;
}

double svm_decision(const LinearSvmModel& m, std::span<const double> row) {
  double acc = m.bias;
  for (std::size_t j = 0; j < row.size(); ++j) acc += m.weights[j] * row[j];
  return acc;
}

std::vector<std::size_t> svm_support_vectors(const LinearSvmModel& m, const Matrix& x,
                                             const std::vector<int>& y) {
  // the subgradient solver leaves margins a few percent off their exact
  // KKT values, so the margin band carries a matching tolerance
  constexpr double kMarginSlack = 0.05;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double yi = y[i] == 1 ? 1.0 : -1.0;
    if (yi * svm_decision(m, x.row(i)) <= 1.0 + kMarginSlack) out.push_back(i);
  }
  return out;
}

// ---- logistic regression -------------------------------------------------------

namespace {

LogRegModel fit_logreg(const Dataset& train) {
  constexpr double kPenalty = 1.0;
  constexpr double kLearningRate = 0.1;
  constexpr std::size_t kIterations = 1000;

  LogRegModel m;
  m.scaler = fit_minmax(train);
  const Dataset scaled = apply_scaler(m.scaler, train, ScaleDirection::Forward);
  const Matrix& x = scaled.features;
  const std::size_t n = x.rows(), d = x.cols();
  m.weights.assign(d, 0.0);

  std::vector<double> gw(d);
  for (std::size_t it = 0; it < kIterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = m.bias;
      for (std::size_t j = 0; j < d; ++j) z += m.weights[j] * x(i, j);
      const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      const double err = p - static_cast<double>(train.labels[i]);
      for (std::size_t j = 0; j < d; ++j) gw[j] += err * x(i, j);
      gb += err;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j)
      m.weights[j] -= kLearningRate * (gw[j] * inv_n + kPenalty * m.weights[j] * inv_n);
    m.bias -= kLearningRate * gb * inv_n;
  }
  return m;
}

std::vector<int> predict_knn(const KnnModel& m, const Matrix& rows) {
  std::vector<int> out(rows.rows());
  const NeighborQuery q{std::min(m.k, m.train_features.rows()), 2.0};
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto nn = knn_query(m.train_features, rows.row(i), q);
    std::size_t ones = 0;
    for (std::size_t j : nn) ones += static_cast<std::size_t>(m.train_labels[j]);
    out[i] = 2 * ones > nn.size() ? 1 : 0;  // even vote resolves to 0
  }
  return out;
}

}  // namespace

// ---- common surface -------------------------------------------------------------

FittedModel fit(LearnerKind kind, const Dataset& train, std::uint64_t seed) {
  validate(train, /*require_both_classes=*/true);
  FittedModel out;
  out.kind = kind;
  out.n_features = train.cols();
  switch (kind) {
    case LearnerKind::Knn:
      out.model = KnnModel{train.features, train.labels, 5};
      break;
    case LearnerKind::LogisticRegression:
      out.model = fit_logreg(train);
      break;
    case LearnerKind::DecisionTree:
      out.model = fit_decision_tree(train.features, train.labels);
      break;
    case LearnerKind::RandomForest:
      out.model = fit_random_forest(train.features, train.labels, seed);
      break;
    case LearnerKind::Svm:
      out.model = fit_linear_svm(train.features, train.labels);
      break;
  }
  return out;
}

std::vector<int> predict(const FittedModel& model, const Matrix& rows) {
  if (rows.cols() != model.n_features)
    throw ConfigError("predict: expected " + std::to_string(model.n_features) +
                      " features, got " + std::to_string(rows.cols()));

  std::vector<int> out(rows.rows());
  if (const auto* knn = std::get_if<KnnModel>(&model.model)) {
    return predict_knn(*knn, rows);
  }
  if (const auto* lr = std::get_if<LogRegModel>(&model.model)) {
    Dataset tmp;
    tmp.features = rows;
    tmp.labels.assign(rows.rows(), 0);
    const Matrix scaled = apply_scaler(lr->scaler, tmp, ScaleDirection::Forward).features;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      double z = lr->bias;
      for (std::size_t j = 0; j < rows.cols(); ++j) z += lr->weights[j] * scaled(i, j);
      out[i] = z > 0.0 ? 1 : 0;  // p > 0.5
    }
    return out;
  }
  if (const auto* tree = std::get_if<TreeModel>(&model.model)) {
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_tree(*tree, rows.row(i));
    return out;
  }
  if (const auto* forest = std::get_if<ForestModel>(&model.model)) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      std::size_t ones = 0;
      for (const TreeModel& t : forest->trees)
        ones += static_cast<std::size_t>(predict_tree(t, rows.row(i)));
      out[i] = 2 * ones > forest->trees.size() ? 1 : 0;
    }
    return out;
  }
  const auto& svm = std::get<LinearSvmModel>(model.model);
  for (std::size_t i = 0; i < rows.rows(); ++i)
    out[i] = svm_decision(svm, rows.row(i)) > 0.0 ? 1 : 0;  // on the hyperplane -> 0
  return out;
}

}  // namespace rebalance
