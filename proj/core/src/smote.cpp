#include "rebalance/smote.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rebalance/errors.hpp"
#include "rebalance/metrics.hpp"
#include "rebalance/neighbors.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

std::vector<double> interpolate(std::span<const double> x, std::span<const double> neighbor,
                                double u) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] + u * (neighbor[j] - x[j]);
  return out;
}

namespace {

std::size_t resolve_target(const Dataset& data, std::size_t target_count) {
  return target_count == 0 ? data.majority_count() : target_count;
}

void check_smote_preconditions(const Dataset& data, const SmoteParams& params) {
  validate(data, /*require_both_classes=*/true);
  const std::size_t minority = data.minority_count();
  if (minority < 2) throw DataError("smote: minority count must be >= 2");
  if (params.k < 1) throw ConfigError("smote: k must be >= 1");
  if (params.k > minority - 1)
    throw ConfigError("smote: k=" + std::to_string(params.k) + " exceeds minority count - 1 = " +
                      std::to_string(minority - 1));
  if (params.r < 1.0) throw ConfigError("smote: r must be >= 1");
  const std::size_t m = resolve_target(data, params.target_count);
  if (m < minority)
    throw ConfigError("smote: target count " + std::to_string(m) +
                      " is below current minority count " + std::to_string(minority));
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
  Matrix out(0, src.cols());
  for (std::size_t i : idx) out.append_row(src.row(i));
  return out;
}

// memoized k-NN lists within the minority point set
class MinorityNeighbors {
 public:
  MinorityNeighbors(const Matrix& minority, std::size_t k, double r)
      : minority_(minority), query_{k, r}, cache_(minority.rows()) {}

  const std::vector<std::size_t>& of(std::size_t i) {
    if (cache_[i].empty()) cache_[i] = knn_query(minority_, minority_.row(i), query_, i);
    return cache_[i];
  }

 private:
  const Matrix& minority_;
  NeighborQuery query_;
  std::vector<std::vector<std::size_t>> cache_;
};

// floor(weight * budget) each, remainder handed out by descending weight
// (ties to the lower index)
std::vector<std::size_t> apportion_by_weight(const std::vector<double>& weights,
                                             std::size_t budget) {
  std::vector<std::size_t> alloc(weights.size(), 0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    alloc[i] = static_cast<std::size_t>(std::floor(weights[i] * static_cast<double>(budget)));
    assigned += alloc[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  for (std::size_t i = 0; assigned < budget; i = (i + 1) % order.size()) {
    ++alloc[order[i]];
    ++assigned;
  }
  return alloc;
}

// largest-remainder apportionment: every share ends within one sample of
// weight * budget, so near-equal weights split near-equally
std::vector<std::size_t> apportion_largest_remainder(const std::vector<double>& weights,
                                                     std::size_t budget) {
  std::vector<std::size_t> alloc(weights.size(), 0);
  std::vector<double> residue(weights.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double share = weights[i] * static_cast<double>(budget);
    alloc[i] = static_cast<std::size_t>(std::floor(share));
    residue[i] = share - std::floor(share);
    assigned += alloc[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return residue[a] > residue[b]; });
  for (std::size_t i = 0; assigned < budget; i = (i + 1) % order.size()) {
    ++alloc[order[i]];
    ++assigned;
  }
  return alloc;
}

}  // namespace

Dataset random_oversample(const Dataset& data, std::uint64_t seed) {
  validate(data, /*require_both_classes=*/true);
  const std::size_t needed = data.majority_count() - std::min(data.majority_count(),
                                                              data.minority_count());
  Dataset out = data;
  if (needed == 0) return out;
  const std::vector<std::size_t> minority = data.indices_of(1);
  Rng rng(seed);
  for (std::size_t n = 0; n < needed; ++n) {
    const std::size_t pick = minority[rng.below(minority.size())];
    out.append(data.features.row(pick), 1);
  }
  return out;
}

Dataset smote(const Dataset& data, const SmoteParams& params) {
  check_smote_preconditions(data, params);
  const std::size_t m = resolve_target(data, params.target_count);
  const std::vector<std::size_t> minority_idx = data.indices_of(1);
  const Matrix minority = gather_rows(data.features, minority_idx);

  Dataset out = data;
  std::size_t needed = m - minority_idx.size();
  if (needed == 0) return out;

  MinorityNeighbors neighbors(minority, params.k, params.r);
  Rng rng(params.seed);
  while (needed > 0) {
    const std::size_t x = rng.below(minority.rows());
    for (std::size_t nb : neighbors.of(x)) {
      if (needed == 0) break;
      const double u = rng.uniform();
      out.append(interpolate(minority.row(x), minority.row(nb), u), 1);
      --needed;
    }
  }
  return out;
}

Dataset adasyn(const Dataset& data, const SmoteParams& params) {
  check_smote_preconditions(data, params);
  const std::size_t m = resolve_target(data, params.target_count);
  const std::vector<std::size_t> minority_idx = data.indices_of(1);
  const Matrix minority = gather_rows(data.features, minority_idx);

  Dataset out = data;
  const std::size_t needed = m - minority_idx.size();
  if (needed == 0) return out;

  // density weight: share of majority points in each minority point's
  // k-neighborhood over the full dataset
  const NeighborQuery all_query{params.k, params.r};
  std::vector<double> weights(minority_idx.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < minority_idx.size(); ++i) {
    const auto nn = knn_query(data.features, data.features.row(minority_idx[i]), all_query,
                              minority_idx[i]);
    std::size_t majority_neighbors = 0;
    for (std::size_t j : nn) majority_neighbors += data.labels[j] == 0 ? 1 : 0;
    weights[i] = static_cast<double>(majority_neighbors) / static_cast<double>(params.k);
    total += weights[i];
  }
  if (total == 0.0)
    throw DataError("ADASYN degenerate (no minority point borders the majority class); use SMOTE");
  for (double& w : weights) w /= total;

  const std::vector<std::size_t> alloc = apportion_by_weight(weights, needed);

  MinorityNeighbors neighbors(minority, params.k, params.r);
  Rng rng(params.seed);
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    for (std::size_t n = 0; n < alloc[i]; ++n) {
      const auto& nn = neighbors.of(i);
      const std::size_t nb = nn[rng.below(nn.size())];
      const double u = rng.uniform();
      out.append(interpolate(minority.row(i), minority.row(nb), u), 1);
    }
  }
  return out;
}

Dataset borderline_smote(const Dataset& data, const SmoteParams& params, bool* danger_empty) {
  check_smote_preconditions(data, params);
  if (danger_empty) *danger_empty = false;
  const std::size_t m = resolve_target(data, params.target_count);
  const std::vector<std::size_t> minority_idx = data.indices_of(1);
  const Matrix minority = gather_rows(data.features, minority_idx);

  Dataset out = data;
  std::size_t needed = m - minority_idx.size();
  if (needed == 0) return out;

  // DANGER set: at least half but not all of the k whole-dataset neighbors are majority
  const NeighborQuery all_query{params.k, params.r};
  std::vector<std::size_t> danger;  // positions within the minority set
  for (std::size_t i = 0; i < minority_idx.size(); ++i) {
    const auto nn = knn_query(data.features, data.features.row(minority_idx[i]), all_query,
                              minority_idx[i]);
    std::size_t majority_neighbors = 0;
    for (std::size_t j : nn) majority_neighbors += data.labels[j] == 0 ? 1 : 0;
    if (2 * majority_neighbors >= params.k && majority_neighbors < params.k) danger.push_back(i);
  }
  if (danger.empty()) {
    if (danger_empty) *danger_empty = true;
    return out;  // nothing on the borderline: input passes through unchanged
  }

  MinorityNeighbors neighbors(minority, params.k, params.r);
  Rng rng(params.seed);
  while (needed > 0) {
    const std::size_t x = danger[rng.below(danger.size())];
    for (std::size_t nb : neighbors.of(x)) {
      if (needed == 0) break;
      const double u = rng.uniform();
      out.append(interpolate(minority.row(x), minority.row(nb), u), 1);
      --needed;
    }
  }
  return out;
}

Dataset svm_smote(const Dataset& data, const SmoteParams& params, bool* fallback) {
  check_smote_preconditions(data, params);
  if (fallback) *fallback = false;
  const std::size_t m = resolve_target(data, params.target_count);
  const std::vector<std::size_t> minority_idx = data.indices_of(1);
  const Matrix minority = gather_rows(data.features, minority_idx);

  Dataset out = data;
  std::size_t needed = m - minority_idx.size();
  if (needed == 0) return out;

  const LinearSvmModel svm = fit_linear_svm(data.features, data.labels);
  const std::vector<std::size_t> sv = svm_support_vectors(svm, data.features, data.labels);
  std::vector<std::size_t> seeds;  // minority support vectors, as minority-set positions
  for (std::size_t pos = 0; pos < minority_idx.size(); ++pos)
    if (std::binary_search(sv.begin(), sv.end(), minority_idx[pos])) seeds.push_back(pos);
  if (seeds.empty()) {
    if (fallback) *fallback = true;
    return smote(data, params);
  }

  const NeighborQuery all_query{params.k, params.r};
  MinorityNeighbors neighbors(minority, params.k, params.r);
  Rng rng(params.seed);
  while (needed > 0) {
    const std::size_t x = seeds[rng.below(seeds.size())];
    const auto nn_all = knn_query(data.features, minority.row(x), all_query, minority_idx[x]);
    std::size_t majority_neighbors = 0;
    for (std::size_t j : nn_all) majority_neighbors += data.labels[j] == 0 ? 1 : 0;
    const bool crowded = 2 * majority_neighbors > params.k;

    for (std::size_t nb : neighbors.of(x)) {
      if (needed == 0) break;
      const double u = rng.uniform();
      if (crowded) {  // pull inward, toward the minority neighbor
        out.append(interpolate(minority.row(x), minority.row(nb), u), 1);
      } else {  // push outward, away from the neighbor
        auto row = interpolate(minority.row(x), minority.row(nb), -u);
        out.append(row, 1);
      }
      --needed;
    }
  }
  return out;
}

Dataset kmeans_smote(const Dataset& data, const SmoteParams& params, std::size_t n_clusters,
                     bool* fallback) {
  check_smote_preconditions(data, params);
  if (fallback) *fallback = false;
  if (n_clusters < 1) throw ConfigError("kmeans_smote: n_clusters must be >= 1");
  n_clusters = std::min(n_clusters, data.rows());
  const std::size_t m = resolve_target(data, params.target_count);

  Dataset out = data;
  std::size_t needed = m - data.minority_count();
  if (needed == 0) return out;

  // Lloyd iterations with seeded kmeans++ init; empty clusters keep their
  // previous centroid
  Rng rng(params.seed);
  Matrix centroids(0, data.cols());
  centroids.append_row(data.features.row(rng.below(data.rows())));
  std::vector<double> dist_sq(data.rows(), 0.0);
  for (std::size_t c = 1; c < n_clusters; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centroids.rows(); ++k) {
        const double d2 = minkowski_distance(data.features.row(i), centroids.row(k), 2.0);
        best = std::min(best, d2 * d2);
      }
      dist_sq[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < data.rows(); ++i) {
        u -= dist_sq[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(data.rows());
    }
    centroids.append_row(data.features.row(pick));
  }

  std::vector<std::size_t> assign(data.rows(), 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      std::size_t best = 0;
      double best_d = minkowski_distance(data.features.row(i), centroids.row(0), 2.0);
      for (std::size_t c = 1; c < n_clusters; ++c) {
        const double d = minkowski_distance(data.features.row(i), centroids.row(c), 2.0);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    Matrix sums(n_clusters, data.cols());
    std::vector<std::size_t> counts(n_clusters, 0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < data.cols(); ++j) sums(assign[i], j) += data.features(i, j);
    }
    for (std::size_t c = 0; c < n_clusters; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < data.cols(); ++j)
        centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }

  // keep clusters where the minority dominates; weight them by minority
  // sparsity (mean pairwise distance)
  struct Cluster {
    std::vector<std::size_t> minority_rows;
    double sparsity = 0.0;
  };
  std::vector<Cluster> eligible;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    Cluster cl;
    std::size_t members = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (assign[i] != c) continue;
      ++members;
      if (data.labels[i] == 1) cl.minority_rows.push_back(i);
    }
    if (members == 0 || 2 * cl.minority_rows.size() <= members) continue;
    double dist_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < cl.minority_rows.size(); ++a)
      for (std::size_t b = a + 1; b < cl.minority_rows.size(); ++b) {
        dist_sum += minkowski_distance(data.features.row(cl.minority_rows[a]),
                                       data.features.row(cl.minority_rows[b]), params.r);
        ++pairs;
      }
    cl.sparsity = pairs == 0 ? 0.0 : dist_sum / static_cast<double>(pairs);
    eligible.push_back(std::move(cl));
  }
  if (eligible.empty()) {
    if (fallback) *fallback = true;
    return smote(data, params);
  }

  double total_sparsity = 0.0;
  for (const Cluster& cl : eligible) total_sparsity += cl.sparsity;
  std::vector<double> weights(eligible.size());
  for (std::size_t i = 0; i < eligible.size(); ++i)
    weights[i] = total_sparsity > 0.0 ? eligible[i].sparsity / total_sparsity
                                      : 1.0 / static_cast<double>(eligible.size());
  const std::vector<std::size_t> alloc = apportion_largest_remainder(weights, needed);

  for (std::size_t ci = 0; ci < eligible.size(); ++ci) {
    const Cluster& cl = eligible[ci];
    if (alloc[ci] == 0) continue;
    const Matrix cluster_minority = gather_rows(data.features, cl.minority_rows);
    if (cluster_minority.rows() == 1) {
      for (std::size_t n = 0; n < alloc[ci]; ++n) out.append(cluster_minority.row(0), 1);
      continue;
    }
    const std::size_t k_eff = std::min(params.k, cluster_minority.rows() - 1);
    MinorityNeighbors neighbors(cluster_minority, k_eff, params.r);
    std::size_t todo = alloc[ci];
    while (todo > 0) {
      const std::size_t x = rng.below(cluster_minority.rows());
      for (std::size_t nb : neighbors.of(x)) {
        if (todo == 0) break;
        const double u = rng.uniform();
        out.append(interpolate(cluster_minority.row(x), cluster_minority.row(nb), u), 1);
        --todo;
      }
    }
  }
  return out;
}

// ---- differential evolution ---------------------------------------------------

std::pair<std::vector<double>, double> differential_evolution(
    const std::function<double(std::span<const double>)>& objective,
    const std::vector<std::pair<double, double>>& bounds, const DeConfig& config) {
  if (bounds.empty()) throw ConfigError("differential_evolution: empty bounds");
  for (const auto& [lo, hi] : bounds)
    if (lo > hi) throw ConfigError("differential_evolution: inverted bound");
  if (config.population_size < 4)
    throw ConfigError("differential_evolution: population must be >= 4");

  const std::size_t dims = bounds.size();
  const std::size_t pop_size = config.population_size;
  const Rng root(config.seed);

  auto evaluate = [&](std::span<const double> x, std::size_t gen, std::size_t member) {
    try {
      return objective(x);
    } catch (const std::exception& e) {
      throw std::runtime_error("differential_evolution: objective failed at generation " +
                               std::to_string(gen) + ", member " + std::to_string(member) + ": " +
                               e.what());
    }
  };

  std::vector<std::vector<double>> population(pop_size);
  std::vector<double> fitness(pop_size);
  std::vector<double> best_point;
  double best_value = std::numeric_limits<double>::infinity();

  // generation 0: seeded uniform init; stream pre-split per member
  for (std::size_t i = 0; i < pop_size; ++i) {
    Rng rng = root.split(i);
    population[i].resize(dims);
    for (std::size_t j = 0; j < dims; ++j)
      population[i][j] = rng.uniform(bounds[j].first, bounds[j].second);
    fitness[i] = evaluate(population[i], 0, i);
    if (fitness[i] < best_value) {
      best_value = fitness[i];
      best_point = population[i];
    }
  }

  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    for (std::size_t i = 0; i < pop_size; ++i) {
      Rng rng = root.split(gen * pop_size + i);
      // rand/1: three distinct partners, none equal to i
      std::size_t a, b, c;
      do a = rng.below(pop_size); while (a == i);
      do b = rng.below(pop_size); while (b == i || b == a);
      do c = rng.below(pop_size); while (c == i || c == a || c == b);

      std::vector<double> trial(dims);
      const std::size_t forced = rng.below(dims);  // bin crossover keeps >= 1 mutant gene
      for (std::size_t j = 0; j < dims; ++j) {
        const bool cross = rng.uniform() < config.crossover_rate || j == forced;
        double v = cross ? population[a][j] +
                               config.mutation_factor * (population[b][j] - population[c][j])
                         : population[i][j];
        trial[j] = std::clamp(v, bounds[j].first, bounds[j].second);
      }
      const double f = evaluate(trial, gen, i);
      if (f <= fitness[i]) {
        population[i] = std::move(trial);
        fitness[i] = f;
        if (f < best_value) {
          best_value = f;
          best_point = population[i];
        }
      }
    }
  }
  return {best_point, best_value};
}

// ---- smotuned -------------------------------------------------------------------

std::pair<Dataset, SmoteParams> smotuned(const Dataset& train, const Dataset& validation,
                                         const SmotunedBounds& bounds, LearnerKind learner,
                                         const DeConfig& config) {
  validate(train, true);
  validate(validation, true);
  const std::size_t minority = train.minority_count();
  if (minority < 2) throw DataError("smotuned: minority count must be >= 2");

  const std::vector<std::pair<double, double>> box = {
      {static_cast<double>(bounds.k_range.first), static_cast<double>(bounds.k_range.second)},
      {static_cast<double>(bounds.r_range.first), static_cast<double>(bounds.r_range.second)},
      {static_cast<double>(bounds.m_range.first), static_cast<double>(bounds.m_range.second)}};

  struct Best {
    double fitness = std::numeric_limits<double>::infinity();
    SmoteParams params;
    Dataset resampled;
  } best;

  std::size_t eval_counter = 0;
  auto objective = [&](std::span<const double> genome) {
    const std::uint64_t trial_seed = hash64(config.seed, "smotuned-trial", eval_counter);
    ++eval_counter;

    SmoteParams p;
    p.k = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(genome[0]), bounds.k_range.first, bounds.k_range.second));
    p.k = std::min(p.k, minority - 1);
    p.r = static_cast<double>(std::clamp<long long>(std::llround(genome[1]),
                                                    bounds.r_range.first, bounds.r_range.second));
    p.target_count = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(genome[2]), bounds.m_range.first, bounds.m_range.second));
    p.target_count = std::max(p.target_count, minority);
    p.seed = trial_seed;

    Dataset resampled = smote(train, p);
    const FittedModel model = fit(learner, resampled, hash64(trial_seed, "fit"));
    const auto predictions = predict(model, validation.features);
    const MetricReport report = score(confusion(validation.labels, predictions));
    const double fitness = 1.0 - report.g_score / 100.0;
    if (fitness < best.fitness) {
      best.fitness = fitness;
      best.params = p;
      best.resampled = std::move(resampled);
    }
    return fitness;
  };

  differential_evolution(objective, box, config);
  return {std::move(best.resampled), best.params};
}

}  // namespace rebalance
