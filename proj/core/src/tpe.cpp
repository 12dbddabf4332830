#include "rebalance/tpe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "rebalance/errors.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

Dimension Dimension::choice(std::string name, std::vector<std::string> options) {
  if (options.empty()) throw ConfigError("choice dimension needs options: " + name);
  Dimension d;
  d.kind = Kind::Choice;
  d.name = std::move(name);
  d.options = std::move(options);
  d.low = 0.0;
  d.high = static_cast<double>(d.options.size() - 1);
  return d;
}

Dimension Dimension::uniform(std::string name, double low, double high) {
  if (!(low < high)) throw ConfigError("uniform dimension needs low < high: " + name);
  Dimension d;
  d.kind = Kind::Uniform;
  d.name = std::move(name);
  d.low = low;
  d.high = high;
  return d;
}

Dimension Dimension::quniform(std::string name, double low, double high, double q) {
  if (!(low < high)) throw ConfigError("quniform dimension needs low < high: " + name);
  if (!(q > 0)) throw ConfigError("quniform dimension needs q > 0: " + name);
  Dimension d;
  d.kind = Kind::QUniform;
  d.name = std::move(name);
  d.low = low;
  d.high = high;
  d.q = q;
  return d;
}

namespace {

double quantize(const Dimension& dim, double v) {
  const double snapped = std::round(v / dim.q) * dim.q;
  return std::clamp(snapped, dim.low, dim.high);
}

double sample_dimension(const Dimension& dim, Rng& rng) {
  switch (dim.kind) {
    case Dimension::Kind::Choice:
      return static_cast<double>(rng.below(dim.options.size()));
    case Dimension::Kind::Uniform:
      return rng.uniform(dim.low, dim.high);
    case Dimension::Kind::QUniform:
      return quantize(dim, rng.uniform(dim.low, dim.high));
  }
  return dim.low;
}

bool dimension_valid(const Dimension& dim, double v) {
  switch (dim.kind) {
    case Dimension::Kind::Choice: {
      const double idx = std::round(v);
      return idx == v && idx >= 0 && idx < static_cast<double>(dim.options.size());
    }
    case Dimension::Kind::Uniform:
      return v >= dim.low && v <= dim.high;
    case Dimension::Kind::QUniform: {
      if (v < dim.low || v > dim.high) return false;
      return std::abs(v - std::round(v / dim.q) * dim.q) < 1e-9 * std::max(1.0, std::abs(v));
    }
  }
  return false;
}

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * 2.5066282746310005);
}

// Parzen model of one numeric dimension: Gaussian kernel per observation,
// bandwidth = gap to the nearest other observation, floored at 1% of the
// dimension's range (full range for a singleton set).
struct NumericParzen {
  std::vector<double> centers, bandwidths;

  NumericParzen(const Dimension& dim, std::vector<double> values) : centers(std::move(values)) {
    const double range = dim.high - dim.low;
    const double floor_bw = 0.01 * range;
    bandwidths.resize(centers.size());
    if (centers.size() == 1) {
      bandwidths[0] = range;
      return;
    }
    std::vector<double> sorted = centers;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), centers[i]);
      double gap = std::numeric_limits<double>::infinity();
      if (it != sorted.begin()) gap = std::min(gap, centers[i] - *(it - 1));
      const auto next = std::upper_bound(sorted.begin(), sorted.end(), centers[i]);
      if (next != sorted.end()) gap = std::min(gap, *next - centers[i]);
      if (!std::isfinite(gap)) gap = range;
      bandwidths[i] = std::max(gap, floor_bw);
    }
  }

  double density(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) acc += normal_pdf(x, centers[i], bandwidths[i]);
    return acc / static_cast<double>(centers.size());
  }

  double sample(const Dimension& dim, Rng& rng) const {
    const std::size_t i = rng.below(centers.size());
    return std::clamp(rng.normal(centers[i], bandwidths[i]), dim.low, dim.high);
  }
};

// categorical with add-one prior
struct CategoricalParzen {
  std::vector<double> probability;

  CategoricalParzen(std::size_t n_options, const std::vector<double>& values) {
    std::vector<double> counts(n_options, 1.0);
    for (double v : values) counts[static_cast<std::size_t>(std::llround(v))] += 1.0;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    probability.resize(n_options);
    for (std::size_t i = 0; i < n_options; ++i) probability[i] = counts[i] / total;
  }

  double density(double v) const { return probability[static_cast<std::size_t>(std::llround(v))]; }

  double sample(Rng& rng) const {
    double u = rng.uniform();
    for (std::size_t i = 0; i < probability.size(); ++i) {
      u -= probability[i];
      if (u <= 0.0) return static_cast<double>(i);
    }
    return static_cast<double>(probability.size() - 1);
  }
};

}  // namespace

bool assignment_valid(const SearchSpace& space, const Assignment& a) {
  if (a.size() != space.dimensions.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!dimension_valid(space.dimensions[i], a[i])) return false;
  return true;
}

Assignment sample_prior(const SearchSpace& space, std::uint64_t seed) {
  if (space.dimensions.empty()) throw ConfigError("sample_prior: empty search space");
  Rng rng(seed);
  Assignment a(space.dimensions.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = sample_dimension(space.dimensions[i], rng);
  return a;
}

Assignment tpe_suggest(const SearchSpace& space, const std::vector<Trial>& history,
                       const TpeConfig& config) {
  if (space.dimensions.empty()) throw ConfigError("tpe_suggest: empty search space");
  if (config.n_startup < 1 || config.n_candidates < 1)
    throw ConfigError("tpe_suggest: n_startup and n_candidates must be >= 1");

  if (history.size() < config.n_startup) return sample_prior(space, hash64(config.seed, "prior"));

  // stable sort keeps earlier trials first among equal losses
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history[a].loss < history[b].loss;
  });
  const std::size_t n_good = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.gamma * static_cast<double>(history.size()))), 1,
      history.size() - 1);

  const std::size_t dims = space.dimensions.size();
  std::vector<std::vector<double>> good(dims), bad(dims);
  for (std::size_t rank = 0; rank < history.size(); ++rank) {
    const Trial& t = history[order[rank]];
    for (std::size_t d = 0; d < dims; ++d)
      (rank < n_good ? good[d] : bad[d]).push_back(t.assignment[d]);
  }

  Rng rng(hash64(config.seed, "suggest"));
  Assignment best;
  double best_score = -std::numeric_limits<double>::infinity();
  constexpr double kDensityFloor = 1e-300;

  // per-dimension models built once, reused across candidates
  std::vector<std::unique_ptr<NumericParzen>> good_num(dims), bad_num(dims);
  std::vector<std::unique_ptr<CategoricalParzen>> good_cat(dims), bad_cat(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const Dimension& dim = space.dimensions[d];
    if (dim.kind == Dimension::Kind::Choice) {
      good_cat[d] = std::make_unique<CategoricalParzen>(dim.options.size(), good[d]);
      bad_cat[d] = std::make_unique<CategoricalParzen>(dim.options.size(), bad[d]);
    } else {
      good_num[d] = std::make_unique<NumericParzen>(dim, std::move(good[d]));
      bad_num[d] = std::make_unique<NumericParzen>(dim, std::move(bad[d]));
    }
  }

  for (std::size_t c = 0; c < config.n_candidates; ++c) {
    Assignment cand(dims);
    double score = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const Dimension& dim = space.dimensions[d];
      if (dim.kind == Dimension::Kind::Choice) {
        cand[d] = good_cat[d]->sample(rng);
        score += std::log(std::max(good_cat[d]->density(cand[d]), kDensityFloor)) -
                 std::log(std::max(bad_cat[d]->density(cand[d]), kDensityFloor));
      } else {
        double v = good_num[d]->sample(dim, rng);
        if (dim.kind == Dimension::Kind::QUniform) v = quantize(dim, v);
        cand[d] = v;
        score += std::log(std::max(good_num[d]->density(v), kDensityFloor)) -
                 std::log(std::max(bad_num[d]->density(v), kDensityFloor));
      }
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

OptimizeResult optimize(const SearchSpace& space,
                        const std::function<double(const Assignment&)>& objective,
                        std::size_t n_iterations, const TpeConfig& config) {
  if (n_iterations < 1) throw ConfigError("optimize: n_iterations must be >= 1");

  OptimizeResult result;
  result.history.reserve(n_iterations);
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < n_iterations; ++i) {
    TpeConfig iter_config = config;
    iter_config.seed = hash64(config.seed, "iteration", i);

    Trial trial;
    trial.assignment = tpe_suggest(space, result.history, iter_config);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      trial.loss = objective(trial.assignment);
      trial.status = TrialStatus::Ok;
      if (!std::isfinite(trial.loss)) {
        trial.loss = config.failure_loss;
        trial.status = TrialStatus::Failed;
      }
    } catch (const std::exception&) {
      trial.loss = config.failure_loss;
      trial.status = TrialStatus::Failed;
    }
    trial.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (trial.loss < best_loss) {
      best_loss = trial.loss;
      result.best = trial;
      result.best_index = i;
    }
    result.history.push_back(std::move(trial));
  }
  return result;
}

std::string trial_to_json(const Trial& trial) {
  nlohmann::json j = {{"assignment", trial.assignment},
                      {"loss", trial.loss},
                      {"status", trial.status == TrialStatus::Ok ? "ok" : "failed"},
                      {"wall_time_seconds", trial.wall_time_seconds}};
  return j.dump();
}

Trial trial_from_json(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  Trial t;
  t.assignment = j.at("assignment").get<std::vector<double>>();
  t.loss = j.at("loss").get<double>();
  t.status = j.at("status").get<std::string>() == "ok" ? TrialStatus::Ok : TrialStatus::Failed;
  t.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  return t;
}

}  // namespace rebalance
