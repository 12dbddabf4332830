#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/rng.hpp"

using namespace rebalance;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path = "test_dataset_tmp_" + std::to_string(counter++) + ".csv";
    std::ofstream f(path);
    f << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

// rows as sortable tuples for multiset comparison
std::vector<std::vector<double>> rows_with_labels(const Dataset& d) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::vector<double> row(d.features.row(i).begin(), d.features.row(i).end());
    row.push_back(d.labels[i]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

TEST_CASE("load_csv basic shape and label handling") {
  TempCsv csv("a,b,label\n1,2,0\n3,4,1\n5,6,no\n");
  const Dataset d = load_csv(csv.path, "label");
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(d.labels == std::vector<int>{0, 1, 0});
  CHECK(d.features(2, 1) == doctest::Approx(6.0));
}

TEST_CASE("load_csv accepts yes/no/true/false aliases") {
  TempCsv csv("x,label\n1,yes\n2,no\n3,YES\n4,True\n5,false\n");
  const Dataset d = load_csv(csv.path, "label");
  CHECK(d.labels == std::vector<int>{1, 0, 1, 1, 0});
}

TEST_CASE("load_csv errors carry row and column positions") {
  TempCsv missing("a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(missing.path, "label"), DataError);

  TempCsv headeronly("a,label\n");
  CHECK_THROWS_WITH_AS(load_csv(headeronly.path, "label"),
                       doctest::Contains("empty dataset"), DataError);

  TempCsv badcell("a,label\n1,0\nfoo,1\n");
  CHECK_THROWS_WITH_AS(load_csv(badcell.path, "label"), doctest::Contains("row 2"), DataError);

  TempCsv badlabel("a,label\n1,7\n");
  CHECK_THROWS_WITH_AS(load_csv(badlabel.path, "label"),
                       doctest::Contains("label outside binary domain"), DataError);

  CHECK_THROWS_AS(load_csv("does_not_exist.csv", "label"), DataError);
}

TEST_CASE("csv round trip preserves rows and labels") {
  const Dataset d = make_synthetic_imbalanced(20, 5, 3, 2.0, 9);
  TempCsv out("");
  save_csv(d, out.path, "target");
  const Dataset back = load_csv(out.path, "target");
  CHECK(back.rows() == d.rows());
  CHECK(back.labels == d.labels);
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      CHECK(back.features(i, j) == doctest::Approx(d.features(i, j)).epsilon(1e-15));
}

TEST_CASE("stratified split: moodle-shaped dataset") {
  // 2942 rows, 24 minority, 13 features
  Dataset d;
  d.features = Matrix(0, 2);
  Rng rng(1);
  for (int i = 0; i < 2942; ++i) {
    const std::vector<double> row = {rng.uniform(), rng.uniform()};
    d.append(row, i < 24 ? 1 : 0);
  }
  const SplitResult parts = stratified_split(d, SplitSpec{0.64, 0.16, 0.20, 5});

  const std::size_t test_rows = parts.test.rows();
  CHECK(test_rows >= 588);
  CHECK(test_rows <= 589);
  const std::size_t test_minority = parts.test.minority_count();
  CHECK(test_minority >= 4);
  CHECK(test_minority <= 5);
  CHECK(parts.train.rows() + parts.validation.rows() + parts.test.rows() == 2942);
}

TEST_CASE("stratified split: exact small arithmetic") {
  Dataset d;
  d.features = Matrix(0, 1);
  for (int i = 0; i < 10; ++i) d.append(std::vector<double>{static_cast<double>(i)}, i < 5);
  const SplitResult parts = stratified_split(d, SplitSpec{0.6, 0.2, 0.2, 3});
  CHECK(parts.train.rows() == 6);
  CHECK(parts.validation.rows() == 2);
  CHECK(parts.test.rows() == 2);
  CHECK(parts.train.minority_count() == 3);
  CHECK(parts.validation.minority_count() == 1);
  CHECK(parts.test.minority_count() == 1);
}

TEST_CASE("stratified split: determinism and partition reconstruction") {
  const Dataset d = make_synthetic_imbalanced(100, 20, 3, 1.0, 4);
  const SplitSpec spec{0.64, 0.16, 0.20, 99};
  const SplitResult a = stratified_split(d, spec);
  const SplitResult b = stratified_split(d, spec);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  // concatenation is the input multiset
  auto all = rows_with_labels(a.train);
  for (const Dataset* p : {&a.validation, &a.test}) {
    auto rows = rows_with_labels(*p);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  auto original = rows_with_labels(d);
  std::sort(all.begin(), all.end());
  std::sort(original.begin(), original.end());
  CHECK(all == original);
}

TEST_CASE("stratified split: per-partition class ratio off by at most one sample") {
  Rng rng(42);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n_min = 3 + rng.below(40);
    const std::size_t n_maj = 10 + rng.below(200);
    const Dataset d =
        make_synthetic_imbalanced(n_maj, n_min, 2, 1.0, 1000 + t);
    const SplitResult parts =
        stratified_split(d, SplitSpec{0.64, 0.16, 0.20, static_cast<std::uint64_t>(7 + t)});
    const Dataset* sets[3] = {&parts.train, &parts.validation, &parts.test};
    const double fr[3] = {0.64, 0.16, 0.20};
    for (int p = 0; p < 3; ++p) {
      CHECK(sets[p]->minority_count() >= 1);
      const double expect_min = fr[p] * static_cast<double>(n_min);
      const double expect_maj = fr[p] * static_cast<double>(n_maj);
      CHECK(std::abs(static_cast<double>(sets[p]->minority_count()) - expect_min) <= 1.0 + 1e-9);
      CHECK(std::abs(static_cast<double>(sets[p]->majority_count()) - expect_maj) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("stratified split rejects classes too small to stratify") {
  Dataset d;
  d.features = Matrix(0, 1);
  d.append(std::vector<double>{0.0}, 0);
  d.append(std::vector<double>{1.0}, 0);
  d.append(std::vector<double>{2.0}, 0);
  d.append(std::vector<double>{3.0}, 1);
  d.append(std::vector<double>{4.0}, 1);
  CHECK_THROWS_AS(stratified_split(d, SplitSpec{}), DataError);
}

TEST_CASE("stratified split rejects fractions that do not sum to 1") {
  const Dataset d = make_synthetic_imbalanced(20, 5, 1, 1.0, 2);
  CHECK_THROWS_AS(stratified_split(d, SplitSpec{0.5, 0.2, 0.2, 0}), ConfigError);
}

TEST_CASE("minmax scaler fit and hand values") {
  Dataset d;
  d.features = Matrix::from_rows({{2}, {4}, {6}});
  d.labels = {0, 0, 1};
  const MinMaxScaler s = fit_minmax(d);
  CHECK(s.minimum[0] == 2.0);
  CHECK(s.maximum[0] == 6.0);

  Dataset two;
  two.features = Matrix::from_rows({{0, 10}, {1, 20}});
  two.labels = {0, 1};
  const MinMaxScaler s2 = fit_minmax(two);
  CHECK(s2.minimum == std::vector<double>{0, 10});
  CHECK(s2.maximum == std::vector<double>{1, 20});

  Dataset constant;
  constant.features = Matrix::from_rows({{5}, {5}});
  constant.labels = {0, 1};
  const MinMaxScaler s3 = fit_minmax(constant);
  CHECK(s3.minimum[0] == 5.0);
  CHECK(s3.maximum[0] == 5.0);
}

TEST_CASE("scaler forward maps fitting data into [0,1] and inverts exactly") {
  const Dataset d = make_synthetic_imbalanced(50, 10, 4, 2.0, 21);
  const MinMaxScaler s = fit_minmax(d);
  const Dataset fwd = apply_scaler(s, d, ScaleDirection::Forward);
  for (double v : fwd.features.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(fwd.labels == d.labels);

  const Dataset back = apply_scaler(s, fwd, ScaleDirection::Inverse);
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      CHECK(back.features(i, j) == doctest::Approx(d.features(i, j)).epsilon(1e-12));
}

TEST_CASE("scaler conventions: endpoints and constant columns") {
  Dataset d;
  d.features = Matrix::from_rows({{2, 5}, {6, 5}});
  d.labels = {0, 1};
  const MinMaxScaler s = fit_minmax(d);
  const Dataset fwd = apply_scaler(s, d, ScaleDirection::Forward);
  CHECK(fwd.features(1, 0) == doctest::Approx(1.0));  // max maps to 1
  CHECK(fwd.features(0, 1) == doctest::Approx(0.0));  // constant column maps to 0
  CHECK(fwd.features(1, 1) == doctest::Approx(0.0));

  Dataset wrong;
  wrong.features = Matrix(1, 3);
  wrong.labels = {0};
  CHECK_THROWS_AS(apply_scaler(s, wrong, ScaleDirection::Forward), ConfigError);
}

TEST_CASE("synthetic fixture: counts, determinism, separation") {
  const Dataset d = make_synthetic_imbalanced(900, 100, 2, 4.0, 7);
  CHECK(d.rows() == 1000);
  CHECK(d.minority_count() == 100);
  CHECK(d.cols() == 2);

  const Dataset again = make_synthetic_imbalanced(900, 100, 2, 4.0, 7);
  CHECK(d == again);

  // zero separation: class-conditional means agree within monte-carlo noise
  const Dataset flat = make_synthetic_imbalanced(4000, 4000, 1, 0.0, 13);
  double mean0 = 0, mean1 = 0;
  for (std::size_t i = 0; i < flat.rows(); ++i)
    (flat.labels[i] == 0 ? mean0 : mean1) += flat.features(i, 0);
  mean0 /= 4000;
  mean1 /= 4000;
  CHECK(std::abs(mean0 - mean1) < 3.0 / std::sqrt(4000.0));
}

TEST_CASE("validate rejects non-finite features and single-class training data") {
  Dataset d = make_synthetic_imbalanced(5, 5, 2, 1.0, 3);
  d.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(d, false), DataError);

  Dataset single;
  single.features = Matrix::from_rows({{1.0}, {2.0}});
  single.labels = {0, 0};
  CHECK_THROWS_AS(validate(single, true), DataError);
  CHECK_NOTHROW(validate(single, false));
}
