#include "rebalance/neighbors.hpp"

#include <algorithm>
#include <cmath>

#include "rebalance/errors.hpp"

namespace rebalance {

double minkowski_distance(std::span<const double> a, std::span<const double> b, double r) {
  if (a.size() != b.size())
    throw ConfigError("minkowski_distance: length mismatch (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  if (r < 1.0) throw ConfigError("minkowski_distance: order r must be >= 1");
  double acc = 0.0;
  if (r == 1.0) {
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
  }
  if (r == 2.0) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), r);
  return std::pow(acc, 1.0 / r);
}

std::vector<std::size_t> knn_query(const Matrix& points, std::span<const double> query,
                                   const NeighborQuery& q, std::optional<std::size_t> self_index) {
  if (points.rows() == 0) throw ConfigError("knn_query: empty point set");
  if (q.k < 1) throw ConfigError("knn_query: k must be >= 1");

  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (self_index && *self_index == i) continue;
    dist.emplace_back(minkowski_distance(points.row(i), query, q.r), i);
  }
  if (q.k > dist.size())
    throw ConfigError("knn_query: k=" + std::to_string(q.k) + " exceeds candidate pool of " +
                      std::to_string(dist.size()));

  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(q.k), dist.end());
  std::vector<std::size_t> out(q.k);
  for (std::size_t i = 0; i < q.k; ++i) out[i] = dist[i].second;
  return out;
}

}  // namespace rebalance
