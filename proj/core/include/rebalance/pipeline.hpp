#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rebalance/cwgan_gp.hpp"
#include "rebalance/dataset.hpp"
#include "rebalance/learners.hpp"
#include "rebalance/metrics.hpp"
#include "rebalance/smote.hpp"
#include "rebalance/tpe.hpp"

namespace rebalance {

enum class Treatment {
  None,
  RandomOversampler,
  Smote,
  Adasyn,
  BorderlineSmote,
  SvmSmote,
  KmeansSmote,
  Smotuned,
  CWganGp,
  Dazzle
};

std::string to_string(Treatment t);
Treatment treatment_from_string(const std::string& name);
const std::vector<Treatment>& default_treatments();  // Table-7 set; kmeans_smote opt-in

// the ten-dimensional cWGAN-GP hyperparameter space
SearchSpace dazzle_search_space();
GanHyperParams hyper_params_from_assignment(const SearchSpace& space, const Assignment& a);

struct DazzleResult {
  Dataset resampled;
  GanHyperParams best_hp;
  std::vector<Trial> history;
  std::size_t best_index = 0;
};

// Bayesian-optimized cWGAN-GP: each trial trains a GAN with candidate
// hyperparameters, resamples, fits `learner` on the resample and scores it
// on `validation`; loss = 1 - g_score/100. Divergent trials score the
// sentinel loss. Returns the resample and hyperparameters of the
// minimal-loss trial (earliest on ties).
DazzleResult dazzle_train(const Dataset& train, const Dataset& validation,
                          const SearchSpace& space, LearnerKind learner,
                          std::size_t bo_iterations, std::uint64_t seed);

struct TreatmentOptions {
  std::size_t bo_iterations = 30;
  std::size_t smotuned_generations = 10;
  std::size_t smotuned_population = 10;
  std::size_t kmeans_clusters = 8;
  GanModelDefaults gan_defaults;
};

struct TreatmentResult {
  Dataset resampled;
  double wall_time_seconds = 0.0;
  std::string chosen_params;  // JSON for dazzle/smotuned, empty otherwise
};

// Dispatch to the named oversampler with the house conventions (full-balance
// target, default k=5 / r=2). Only smotuned and dazzle see `validation`.
TreatmentResult run_treatment(Treatment treatment, const Dataset& train,
                              const Dataset& validation, LearnerKind learner, std::uint64_t seed,
                              const TreatmentOptions& options = {});

struct ExperimentConfig {
  std::string data_path;
  std::string label_column = "label";
  std::vector<Treatment> treatments = default_treatments();
  std::vector<LearnerKind> learners = learner_menu();
  std::size_t repeats = 10;
  std::size_t bo_iterations = 30;
  SplitSpec split;  // fractions only; per-repeat seeds derive from master_seed
  std::uint64_t master_seed = 0;
  std::string out_dir;
  TreatmentOptions options;
  // optional observer: receives one event string per phase transition
  std::function<void(const std::string&)> trace;
};

struct RunRecord {
  std::string treatment, learner;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  MetricReport metrics;
  double oversample_seconds = 0.0;
  std::string chosen_params;
  bool failed = false;
  std::string error;
};

std::string record_to_json(const RunRecord& r);
RunRecord record_from_json(const std::string& line);

// One record per (treatment, learner, repeat). Fresh stratified split per
// repeat; learners fit on the resampled training partition and score on the
// held-out test partition. Completed records found in out_dir/records.jsonl
// are not recomputed.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);
std::vector<RunRecord> run_experiment_on(const ExperimentConfig& config, const Dataset& data);

std::vector<RunRecord> load_records(const std::string& dir);

enum class ReportFormat { Csv, Json, Markdown };

struct ReportOptions {
  ReportFormat format = ReportFormat::Markdown;
  bool include_precision_accuracy = false;  // both are unreliable on rare positives
  bool runtime_buckets = false;             // render runtimes as "< N min"
};

// Medians over repeats per (metric, treatment, learner); the best value per
// (metric, learner) column is highlighted, ties included. A runtime summary
// per treatment is appended.
std::string report(const std::vector<RunRecord>& records, const ReportOptions& options = {});

}  // namespace rebalance
