#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rebalance/errors.hpp"
#include "rebalance/neighbors.hpp"
#include "rebalance/rng.hpp"

using namespace rebalance;

namespace {

// full-sort oracle: compute every distance, sort by (distance, index)
std::vector<std::size_t> knn_oracle(const Matrix& points, std::span<const double> query, double r,
                                    std::size_t k, std::optional<std::size_t> self) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (self && *self == i) continue;
    double acc = 0;
    for (std::size_t j = 0; j < points.cols(); ++j)
      acc += std::pow(std::abs(points(i, j) - query[j]), r);
    d.emplace_back(std::pow(acc, 1.0 / r), i);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

TEST_CASE("minkowski distance hand values") {
  const std::vector<double> a = {0, 0}, b = {1, 2};
  CHECK(minkowski_distance(a, b, 1.0) == doctest::Approx(3.0));
  CHECK(minkowski_distance(a, b, 2.0) == doctest::Approx(std::sqrt(5.0)));
  CHECK(minkowski_distance(b, b, 3.0) == doctest::Approx(0.0));
}

TEST_CASE("minkowski distance is symmetric and rejects bad input") {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6}, c = {1};
  CHECK(minkowski_distance(a, b, 1.7) == doctest::Approx(minkowski_distance(b, a, 1.7)));
  CHECK_THROWS_AS(minkowski_distance(a, c, 2.0), ConfigError);
  CHECK_THROWS_AS(minkowski_distance(a, b, 0.5), ConfigError);
}

TEST_CASE("r=2 agrees with the euclidean norm") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(5), b(5);
    double sq = 0;
    for (int j = 0; j < 5; ++j) {
      a[j] = rng.uniform(-10, 10);
      b[j] = rng.uniform(-10, 10);
      sq += (a[j] - b[j]) * (a[j] - b[j]);
    }
    CHECK(minkowski_distance(a, b, 2.0) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
  }
}

TEST_CASE("knn hand example") {
  const Matrix pts = Matrix::from_rows({{0, 0}, {1, 0}, {5, 0}});
  const std::vector<double> q = {0.4, 0.0};
  const auto nn = knn_query(pts, q, {2, 2.0});
  REQUIRE(nn.size() == 2);
  CHECK(nn[0] == 0);
  CHECK(nn[1] == 1);
}

TEST_CASE("k equal to point count returns a permutation") {
  const Matrix pts = Matrix::from_rows({{0.0}, {3.0}, {1.0}, {2.0}});
  auto nn = knn_query(pts, std::vector<double>{1.4}, {4, 2.0});
  std::sort(nn.begin(), nn.end());
  CHECK(nn == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("equidistant ties break toward the lower index") {
  // indices 1 and 3 both at distance 1 from the query
  const Matrix pts = Matrix::from_rows({{9.0}, {1.0}, {9.0}, {-1.0}});
  const auto nn = knn_query(pts, std::vector<double>{0.0}, {2, 2.0});
  CHECK(nn[0] == 1);
  CHECK(nn[1] == 3);

  const Matrix pts2 = Matrix::from_rows({{9.0}, {-1.0}, {9.0}, {1.0}});
  const auto nn2 = knn_query(pts2, std::vector<double>{0.0}, {2, 2.0});
  CHECK(nn2[0] == 1);  // same distances, lower index listed first
  CHECK(nn2[1] == 3);
}

TEST_CASE("exclude_self skips the query row") {
  const Matrix pts = Matrix::from_rows({{0.0}, {1.0}, {2.0}});
  const auto nn = knn_query(pts, pts.row(0), {1, 2.0}, 0);
  CHECK(nn[0] == 1);
}

TEST_CASE("k larger than the candidate pool is rejected") {
  const Matrix pts = Matrix::from_rows({{0.0}, {1.0}});
  CHECK_THROWS_AS(knn_query(pts, std::vector<double>{0.0}, {3, 2.0}), ConfigError);
  CHECK_THROWS_AS(knn_query(pts, pts.row(0), {2, 2.0}, 0), ConfigError);
}

TEST_CASE("property: matches the full-sort oracle on random instances") {
  Rng rng(77);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + rng.below(198);
    const std::size_t d = 1 + rng.below(6);
    Matrix pts(n, d);
    for (double& v : pts.data()) v = rng.uniform(-5, 5);
    const double r = 1.0 + rng.uniform() * 3.0;
    const std::size_t k = 1 + rng.below(n);
    std::vector<double> q(d);
    for (double& v : q) v = rng.uniform(-5, 5);

    const auto got = knn_query(pts, q, {k, r});
    const auto want = knn_oracle(pts, q, r, k, std::nullopt);
    CHECK(got == want);
  }
}

TEST_CASE("property: k-th distance is non-decreasing in k") {
  Rng rng(78);
  Matrix pts(50, 3);
  for (double& v : pts.data()) v = rng.uniform(-5, 5);
  const std::vector<double> q = {0.1, -0.2, 0.3};
  double prev = -1.0;
  for (std::size_t k = 1; k <= 50; ++k) {
    const auto nn = knn_query(pts, q, {k, 2.0});
    const double dist = minkowski_distance(pts.row(nn.back()), q, 2.0);
    CHECK(dist >= prev - 1e-12);
    prev = dist;
  }
}
