#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rebalance/matrix.hpp"

namespace rebalance {

// Dense numeric feature matrix with binary labels. Label 1 marks the
// minority (security) class, 0 the majority class. Immutable by convention
// once built; every operation below returns a fresh Dataset.
struct Dataset {
  Matrix features;                         // rows = samples
  std::vector<int> labels;                 // one per row, in {0,1}
  std::vector<std::string> feature_names;  // one per column

  std::size_t rows() const { return features.rows(); }
  std::size_t cols() const { return features.cols(); }
  std::size_t count_label(int label) const;
  std::size_t minority_count() const { return count_label(1); }
  std::size_t majority_count() const { return count_label(0); }

  // row indices of one class, ascending
  std::vector<std::size_t> indices_of(int label) const;

  void append(std::span<const double> row, int label);

  bool operator==(const Dataset& o) const {
    return features == o.features && labels == o.labels && feature_names == o.feature_names;
  }
};

// throws DataError if shapes disagree, a feature is non-finite, or (when
// require_both_classes) a class is missing
void validate(const Dataset& d, bool require_both_classes);

struct SplitSpec {
  double train_fraction = 0.64;
  double validation_fraction = 0.16;
  double test_fraction = 0.20;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train, validation, test;
};

struct MinMaxScaler {
  std::vector<double> minimum, maximum;
};

enum class ScaleDirection { Forward, Inverse };

Dataset load_csv(const std::string& path, const std::string& label_column);
void save_csv(const Dataset& d, const std::string& path, const std::string& label_column = "label");

// Per-class apportionment: train/validation get round(fraction * count),
// test gets the remainder; every partition is then topped up to hold at
// least one sample of each class. Shuffling is driven only by spec.seed.
SplitResult stratified_split(const Dataset& data, const SplitSpec& spec);

MinMaxScaler fit_minmax(const Dataset& data);
Dataset apply_scaler(const MinMaxScaler& scaler, const Dataset& data, ScaleDirection direction);

// Two isotropic unit-variance Gaussian blobs whose means differ by
// `separation` along the first axis. Test fixture.
Dataset make_synthetic_imbalanced(std::size_t n_majority, std::size_t n_minority,
                                  std::size_t n_features, double separation, std::uint64_t seed);

}  // namespace rebalance
