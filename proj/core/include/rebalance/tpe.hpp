#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rebalance/matrix.hpp"

namespace rebalance {

// Flat search space: choice / uniform / quniform dimensions. Assignments are
// plain double vectors; a choice dimension carries the option index.
struct Dimension {
  enum class Kind { Choice, Uniform, QUniform };
  Kind kind = Kind::Uniform;
  std::string name;
  std::vector<std::string> options;  // Choice
  double low = 0.0, high = 1.0, q = 1.0;

  static Dimension choice(std::string name, std::vector<std::string> options);
  static Dimension uniform(std::string name, double low, double high);
  static Dimension quniform(std::string name, double low, double high, double q);
};

struct SearchSpace {
  std::vector<Dimension> dimensions;
};

using Assignment = std::vector<double>;

bool assignment_valid(const SearchSpace& space, const Assignment& a);

enum class TrialStatus { Ok, Failed };

struct Trial {
  Assignment assignment;
  double loss = 0.0;
  TrialStatus status = TrialStatus::Ok;
  double wall_time_seconds = 0.0;
};

struct TpeConfig {
  std::size_t n_startup = 10;   // random trials before the Parzen model kicks in
  double gamma = 0.25;          // quantile separating good from bad trials
  std::size_t n_candidates = 24;
  std::uint64_t seed = 0;
  double failure_loss = 1.0;    // sentinel recorded for failed trials
};

Assignment sample_prior(const SearchSpace& space, std::uint64_t seed);

// Split the history at the gamma-quantile into good/bad sets, model each per
// dimension with a Parzen density (Gaussian kernels with a neighbor-gap
// bandwidth; add-one categorical counts), draw n_candidates from the good
// model and return the candidate with the largest good/bad density ratio.
Assignment tpe_suggest(const SearchSpace& space, const std::vector<Trial>& history,
                       const TpeConfig& config);

struct OptimizeResult {
  Trial best;
  std::size_t best_index = 0;
  std::vector<Trial> history;
};

// Exactly n_iterations objective evaluations; objective exceptions become
// failed trials at the sentinel loss. Best = minimal loss, earliest on ties.
OptimizeResult optimize(const SearchSpace& space,
                        const std::function<double(const Assignment&)>& objective,
                        std::size_t n_iterations, const TpeConfig& config);

// JSON-lines round trip of trial histories (resumable runs, post-hoc analysis)
std::string trial_to_json(const Trial& trial);
Trial trial_from_json(const std::string& line);

}  // namespace rebalance
