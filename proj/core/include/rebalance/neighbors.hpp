#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rebalance/matrix.hpp"

namespace rebalance {

struct NeighborQuery {
  std::size_t k = 5;
  double r = 2.0;  // Minkowski order, >= 1
};

// d(a,b) = (sum |a_i - b_i|^r)^(1/r)
double minkowski_distance(std::span<const double> a, std::span<const double> b, double r);

// Brute-force k nearest neighbors of `query` among the rows of `points`.
// Indices come back sorted by ascending distance, ties by ascending row
// index. `self_index`, when set, excludes that row from the candidates.
std::vector<std::size_t> knn_query(const Matrix& points, std::span<const double> query,
                                   const NeighborQuery& q,
                                   std::optional<std::size_t> self_index = std::nullopt);

}  // namespace rebalance
