#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/learners.hpp"

namespace rebalance {

struct SmoteParams {
  std::size_t k = 5;          // minority neighbors considered
  double r = 2.0;             // Minkowski order
  std::size_t target_count = 0;  // desired minority total; 0 = match majority
  std::uint64_t seed = 0;
};

struct SmotunedBounds {
  std::pair<int, int> k_range{1, 20};
  std::pair<int, int> r_range{1, 6};
  std::pair<int, int> m_range{50, 500};
};

struct DeConfig {
  std::size_t population_size = 10;
  double mutation_factor = 0.8;   // F
  double crossover_rate = 0.9;    // CR
  std::size_t generations = 10;
  std::uint64_t seed = 0;
};

// x + u * (neighbor - x), u in [0,1]
std::vector<double> interpolate(std::span<const double> x, std::span<const double> neighbor,
                                double u);

Dataset random_oversample(const Dataset& data, std::uint64_t seed);
Dataset smote(const Dataset& data, const SmoteParams& params);
Dataset adasyn(const Dataset& data, const SmoteParams& params);

// `danger_empty`, when supplied, reports the no-borderline-points fallback
// (input returned unchanged).
Dataset borderline_smote(const Dataset& data, const SmoteParams& params,
                         bool* danger_empty = nullptr);

// `fallback`, when supplied, reports that no minority support vectors were
// found and plain smote ran instead.
Dataset svm_smote(const Dataset& data, const SmoteParams& params, bool* fallback = nullptr);

Dataset kmeans_smote(const Dataset& data, const SmoteParams& params, std::size_t n_clusters,
                     bool* fallback = nullptr);

// rand/1/bin differential evolution over a box; returns the best evaluated
// point. Evaluation count is population_size * (generations + 1).
std::pair<std::vector<double>, double> differential_evolution(
    const std::function<double(std::span<const double>)>& objective,
    const std::vector<std::pair<double, double>>& bounds, const DeConfig& config);

// SMOTE with (k, r, m) tuned by differential evolution; fitness is
// 1 - g_measure/100 of `learner` trained on the candidate resample and
// scored on `validation`.
std::pair<Dataset, SmoteParams> smotuned(const Dataset& train, const Dataset& validation,
                                         const SmotunedBounds& bounds, LearnerKind learner,
                                         const DeConfig& config);

}  // namespace rebalance
