#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/learners.hpp"
#include "rebalance/rng.hpp"

using namespace rebalance;

namespace {

Dataset blobs(std::size_t n_per_class, double separation, std::uint64_t seed) {
  return make_synthetic_imbalanced(n_per_class, n_per_class, 2, separation, seed);
}

double train_accuracy(const FittedModel& m, const Dataset& d) {
  const auto pred = predict(m, d.features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == d.labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("knn stores the training set verbatim and recalls exact points") {
  const Dataset d = blobs(20, 4.0, 3);
  const FittedModel m = fit(LearnerKind::Knn, d, 0);
  const auto& knn = std::get<KnnModel>(m.model);
  CHECK(knn.train_features == d.features);
  CHECK(knn.train_labels == d.labels);

  // k=1 at an exact training point returns that point's label
  KnnModel one = knn;
  one.k = 1;
  FittedModel m1{one, LearnerKind::Knn, d.cols()};
  Matrix probe(0, d.cols());
  probe.append_row(d.features.row(0));
  probe.append_row(d.features.row(d.rows() - 1));
  const auto pred = predict(m1, probe);
  CHECK(pred[0] == d.labels[0]);
  CHECK(pred[1] == d.labels[d.rows() - 1]);
}

TEST_CASE("decision tree solves the 4-point xor set exactly") {
  Dataset d;
  d.features = Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  d.labels = {0, 1, 1, 0};
  const FittedModel m = fit(LearnerKind::DecisionTree, d, 0);
  CHECK(train_accuracy(m, d) == doctest::Approx(1.0));
}

TEST_CASE("logistic regression separates 1-d data") {
  Dataset d;
  d.features = Matrix(0, 1);
  for (int i = 0; i < 20; ++i) {
    d.append(std::vector<double>{-1.0 - 0.01 * i}, 0);
    d.append(std::vector<double>{1.0 + 0.01 * i}, 1);
  }
  const FittedModel m = fit(LearnerKind::LogisticRegression, d, 0);
  CHECK(train_accuracy(m, d) == doctest::Approx(1.0));
}

TEST_CASE("svm convention: point exactly on the hyperplane gets label 0") {
  LinearSvmModel svm;
  svm.weights = {1.0, 0.0};
  svm.bias = 0.0;
  FittedModel m{svm, LearnerKind::Svm, 2};
  const Matrix rows = Matrix::from_rows({{0.0, 5.0}, {1.0, 0.0}, {-1.0, 0.0}});
  const auto pred = predict(m, rows);
  CHECK(pred[0] == 0);  // on the plane
  CHECK(pred[1] == 1);
  CHECK(pred[2] == 0);
}

TEST_CASE("random forest with one tree and bootstrap off collapses to the decision tree") {
  const Dataset d = make_synthetic_imbalanced(40, 20, 3, 2.0, 17);
  ForestOptions opts;
  opts.n_trees = 1;
  opts.bootstrap = false;
  opts.max_features = d.cols();  // no feature subsampling
  const ForestModel forest = fit_random_forest(d.features, d.labels, 5, opts);
  const TreeModel tree = fit_decision_tree(d.features, d.labels);

  const Dataset probe = make_synthetic_imbalanced(30, 30, 3, 2.0, 99);
  for (std::size_t i = 0; i < probe.rows(); ++i)
    CHECK(predict_tree(forest.trees[0], probe.features.row(i)) ==
          predict_tree(tree, probe.features.row(i)));
}

TEST_CASE("forest majority vote equals the mode of individual trees") {
  const Dataset d = make_synthetic_imbalanced(30, 15, 2, 2.0, 23);
  ForestOptions opts;
  opts.n_trees = 5;
  const ForestModel forest = fit_random_forest(d.features, d.labels, 7, opts);
  FittedModel m{forest, LearnerKind::RandomForest, d.cols()};

  const Dataset probe = make_synthetic_imbalanced(20, 20, 2, 2.0, 31);
  const auto pred = predict(m, probe.features);
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    std::size_t ones = 0;
    for (const TreeModel& t : forest.trees)
      ones += static_cast<std::size_t>(predict_tree(t, probe.features.row(i)));
    CHECK(pred[i] == (2 * ones > forest.trees.size() ? 1 : 0));
  }
}

TEST_CASE("every learner reaches 100% training accuracy on well-separated blobs") {
  const Dataset d = blobs(50, 6.0, 41);
  for (LearnerKind kind : learner_menu()) {
    const FittedModel m = fit(kind, d, 11);
    INFO("learner=", to_string(kind));
    CHECK(train_accuracy(m, d) == doctest::Approx(1.0));
  }
}

TEST_CASE("fit rejects single-class data, predict rejects wrong widths") {
  Dataset single;
  single.features = Matrix::from_rows({{1.0}, {2.0}});
  single.labels = {1, 1};
  CHECK_THROWS_AS(fit(LearnerKind::Knn, single, 0), DataError);

  const Dataset d = blobs(10, 4.0, 5);
  const FittedModel m = fit(LearnerKind::DecisionTree, d, 0);
  CHECK_THROWS_AS(predict(m, Matrix(1, 5, 0.0)), ConfigError);
}

TEST_CASE("fits are deterministic per seed") {
  const Dataset d = make_synthetic_imbalanced(60, 30, 4, 3.0, 71);
  const Dataset probe = make_synthetic_imbalanced(40, 40, 4, 3.0, 72);
  for (LearnerKind kind : learner_menu()) {
    const FittedModel a = fit(kind, d, 99);
    const FittedModel b = fit(kind, d, 99);
    CHECK(predict(a, probe.features) == predict(b, probe.features));
  }
  // different forest seeds usually change at least the trees' structure
  const ForestModel f1 = fit_random_forest(d.features, d.labels, 1, {.n_trees = 3});
  const ForestModel f2 = fit_random_forest(d.features, d.labels, 2, {.n_trees = 3});
  bool any_diff = false;
  for (std::size_t t = 0; t < 3 && !any_diff; ++t)
    any_diff = f1.trees[t].nodes.size() != f2.trees[t].nodes.size();
  CHECK(any_diff);
}

TEST_CASE("support vectors are the margin-violating points") {
  // far-apart separable blobs: only points near the boundary stay inside
  // the margin band
  const Dataset d = blobs(40, 8.0, 53);
  const LinearSvmModel svm = fit_linear_svm(d.features, d.labels);
  const auto sv = svm_support_vectors(svm, d.features, d.labels);
  CHECK(sv.size() < d.rows());
  constexpr double kMarginSlack = 0.05;  // mirrors the solver slack in the SV criterion
  for (std::size_t i : sv) {
    const double yi = d.labels[i] == 1 ? 1.0 : -1.0;
    CHECK(yi * svm_decision(svm, d.features.row(i)) <= 1.0 + kMarginSlack);
  }
  // every non-support-vector lies strictly outside the slackened margin
  std::vector<bool> is_sv(d.rows(), false);
  for (std::size_t i : sv) is_sv[i] = true;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    if (is_sv[i]) continue;
    const double yi = d.labels[i] == 1 ? 1.0 : -1.0;
    CHECK(yi * svm_decision(svm, d.features.row(i)) > 1.0 + kMarginSlack);
  }
}

TEST_CASE("knn even-vote tie resolves toward the majority label 0") {
  Dataset d;
  d.features = Matrix::from_rows({{0.0}, {2.0}});
  d.labels = {0, 1};
  KnnModel knn{d.features, d.labels, 2};
  FittedModel m{knn, LearnerKind::Knn, 1};
  const auto pred = predict(m, Matrix::from_rows({{1.0}}));  // equidistant, 1-1 vote
  CHECK(pred[0] == 0);
}
