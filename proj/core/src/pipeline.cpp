#include "rebalance/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rebalance/errors.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

std::string to_string(Treatment t) {
  switch (t) {
    case Treatment::None: return "none";
    case Treatment::RandomOversampler: return "random_oversampler";
    case Treatment::Smote: return "smote";
    case Treatment::Adasyn: return "adasyn";
    case Treatment::BorderlineSmote: return "borderline_smote";
    case Treatment::SvmSmote: return "svm_smote";
    case Treatment::KmeansSmote: return "kmeans_smote";
    case Treatment::Smotuned: return "smotuned";
    case Treatment::CWganGp: return "cwgan_gp";
    case Treatment::Dazzle: return "dazzle";
  }
  return "?";
}

Treatment treatment_from_string(const std::string& name) {
  static const std::vector<Treatment> all = {
      Treatment::None,        Treatment::RandomOversampler, Treatment::Smote,
      Treatment::Adasyn,      Treatment::BorderlineSmote,   Treatment::SvmSmote,
      Treatment::KmeansSmote, Treatment::Smotuned,          Treatment::CWganGp,
      Treatment::Dazzle};
  for (Treatment t : all)
    if (to_string(t) == name) return t;
  throw ConfigError("unknown treatment: " + name);
}

const std::vector<Treatment>& default_treatments() {
  static const std::vector<Treatment> defaults = {
      Treatment::None,     Treatment::RandomOversampler, Treatment::Smote,
      Treatment::Adasyn,   Treatment::BorderlineSmote,   Treatment::SvmSmote,
      Treatment::Smotuned, Treatment::CWganGp,           Treatment::Dazzle};
  return defaults;
}

SearchSpace dazzle_search_space() {
  std::vector<std::string> batch, lr;
  for (std::size_t b : batch_size_menu()) batch.push_back(std::to_string(b));
  for (double v : learning_rate_menu()) {
    std::ostringstream os;
    os << v;
    lr.push_back(os.str());
  }
  std::vector<std::string> opts, acts;
  for (OptimizerKind k : optimizer_menu()) opts.push_back(to_string(k));
  for (Activation a : activation_menu()) acts.push_back(to_string(a));

  SearchSpace s;
  s.dimensions = {Dimension::choice("batch_size", batch),
                  Dimension::choice("lr_generator", lr),
                  Dimension::choice("lr_discriminator", lr),
                  Dimension::choice("optimizer_generator", opts),
                  Dimension::choice("optimizer_discriminator", opts),
                  Dimension::choice("activation_generator", acts),
                  Dimension::choice("activation_discriminator", acts),
                  Dimension::quniform("epochs", 5, 20, 1),
                  Dimension::choice("layer_norm_generator", {"false", "true"}),
                  Dimension::choice("layer_norm_discriminator", {"false", "true"})};
  return s;
}

GanHyperParams hyper_params_from_assignment(const SearchSpace& space, const Assignment& a) {
  if (!assignment_valid(space, a))
    throw ConfigError("assignment does not validate against the search space");
  auto idx = [&](std::size_t d) { return static_cast<std::size_t>(std::llround(a[d])); };
  GanHyperParams hp;
  hp.batch_size = batch_size_menu()[idx(0)];
  hp.lr_generator = learning_rate_menu()[idx(1)];
  hp.lr_discriminator = learning_rate_menu()[idx(2)];
  hp.optimizer_generator = optimizer_menu()[idx(3)];
  hp.optimizer_discriminator = optimizer_menu()[idx(4)];
  hp.activation_generator = activation_menu()[idx(5)];
  hp.activation_discriminator = activation_menu()[idx(6)];
  hp.epochs = static_cast<std::size_t>(std::llround(a[7]));
  hp.layer_norm_generator = idx(8) == 1;
  hp.layer_norm_discriminator = idx(9) == 1;
  return hp;
}

namespace {

double validation_g_score(const Dataset& resampled, const Dataset& validation,
                          LearnerKind learner, std::uint64_t seed) {
  const FittedModel model = fit(learner, resampled, seed);
  const auto predictions = predict(model, validation.features);
  return score(confusion(validation.labels, predictions)).g_score;
}

std::string hp_to_json(const GanHyperParams& hp) {
  nlohmann::json j = {{"batch_size", hp.batch_size},
                      {"lr_generator", hp.lr_generator},
                      {"lr_discriminator", hp.lr_discriminator},
                      {"optimizer_generator", to_string(hp.optimizer_generator)},
                      {"optimizer_discriminator", to_string(hp.optimizer_discriminator)},
                      {"activation_generator", to_string(hp.activation_generator)},
                      {"activation_discriminator", to_string(hp.activation_discriminator)},
                      {"epochs", hp.epochs},
                      {"layer_norm_generator", hp.layer_norm_generator},
                      {"layer_norm_discriminator", hp.layer_norm_discriminator}};
  return j.dump();
}

}  // namespace

DazzleResult dazzle_train(const Dataset& train, const Dataset& validation,
                          const SearchSpace& space, LearnerKind learner,
                          std::size_t bo_iterations, std::uint64_t seed) {
  validate(train, true);
  validate(validation, true);
  if (bo_iterations < 1) throw ConfigError("dazzle_train: bo_iterations must be >= 1");

  struct Best {
    double loss = std::numeric_limits<double>::infinity();
    Dataset resampled;
    GanHyperParams hp;
    bool any = false;
  } best;

  std::size_t trial_counter = 0;
  auto objective = [&](const Assignment& a) {
    const std::uint64_t trial_seed = hash64(seed, "dazzle-trial", trial_counter);
    ++trial_counter;
    const GanHyperParams hp = hyper_params_from_assignment(space, a);
    // GanDivergence propagates: the optimizer records the sentinel loss
    Dataset resampled = oversample_with_gan(train, hp, trial_seed);
    const double g = validation_g_score(resampled, validation, learner, hash64(trial_seed, "fit"));
    const double loss = 1.0 - g / 100.0;
    if (loss < best.loss) {
      best.loss = loss;
      best.resampled = std::move(resampled);
      best.hp = hp;
      best.any = true;
    }
    return loss;
  };

  TpeConfig config;
  config.seed = hash64(seed, "dazzle-bo");
  OptimizeResult result = optimize(space, objective, bo_iterations, config);

  if (!best.any)
    throw std::runtime_error("dazzle_train: all " + std::to_string(bo_iterations) +
                             " trials failed (GAN never produced a finite model)");
  return {std::move(best.resampled), best.hp, std::move(result.history), result.best_index};
}

TreatmentResult run_treatment(Treatment treatment, const Dataset& train,
                              const Dataset& validation, LearnerKind learner, std::uint64_t seed,
                              const TreatmentOptions& options) {
  validate(train, true);
  const auto t0 = std::chrono::steady_clock::now();
  TreatmentResult out;

  SmoteParams params;
  params.k = std::min<std::size_t>(5, std::max<std::size_t>(1, train.minority_count() - 1));
  params.r = 2.0;
  params.target_count = 0;  // full balance
  params.seed = seed;

  switch (treatment) {
    case Treatment::None:
      out.resampled = train;
      break;
    case Treatment::RandomOversampler:
      out.resampled = random_oversample(train, seed);
      break;
    case Treatment::Smote:
      out.resampled = smote(train, params);
      break;
    case Treatment::Adasyn:
      out.resampled = adasyn(train, params);
      break;
    case Treatment::BorderlineSmote:
      out.resampled = borderline_smote(train, params);
      break;
    case Treatment::SvmSmote:
      out.resampled = svm_smote(train, params);
      break;
    case Treatment::KmeansSmote:
      out.resampled = kmeans_smote(train, params, options.kmeans_clusters);
      break;
    case Treatment::Smotuned: {
      DeConfig de;
      de.population_size = options.smotuned_population;
      de.generations = options.smotuned_generations;
      de.seed = seed;
      auto [resampled, chosen] = smotuned(train, validation, SmotunedBounds{}, learner, de);
      out.resampled = std::move(resampled);
      nlohmann::json j = {{"k", chosen.k}, {"r", chosen.r}, {"m", chosen.target_count}};
      out.chosen_params = j.dump();
      break;
    }
    case Treatment::CWganGp: {
      // hyperparameters drawn at random from the Table-4 space each run;
      // divergent draws are retried with a fresh derived seed
      const SearchSpace space = dazzle_search_space();
      constexpr std::size_t kMaxAttempts = 3;
      for (std::size_t attempt = 0;; ++attempt) {
        const GanHyperParams hp = hyper_params_from_assignment(
            space, sample_prior(space, hash64(seed, "cwgan-hp", attempt)));
        try {
          out.resampled = oversample_with_gan(train, hp, hash64(seed, "cwgan", attempt));
          out.chosen_params = hp_to_json(hp);
          break;
        } catch (const GanDivergence&) {
          if (attempt + 1 >= kMaxAttempts) throw;
        }
      }
      break;
    }
    case Treatment::Dazzle: {
      DazzleResult r = dazzle_train(train, validation, dazzle_search_space(), learner,
                                    options.bo_iterations, seed);
      out.resampled = std::move(r.resampled);
      out.chosen_params = hp_to_json(r.best_hp);
      break;
    }
  }
  out.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---- experiment harness -----------------------------------------------------

std::string record_to_json(const RunRecord& r) {
  nlohmann::json j = {{"schema_version", 1},
                      {"treatment", r.treatment},
                      {"learner", r.learner},
                      {"repeat", r.repeat},
                      {"seed", r.seed},
                      {"pd", r.metrics.pd},
                      {"pf", r.metrics.pf},
                      {"prec", r.metrics.prec},
                      {"acc", r.metrics.acc},
                      {"f1", r.metrics.f1},
                      {"g_score", r.metrics.g_score},
                      {"oversample_seconds", r.oversample_seconds},
                      {"chosen_params", r.chosen_params},
                      {"failed", r.failed},
                      {"error", r.error}};
  return j.dump();
}

RunRecord record_from_json(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  if (j.at("schema_version").get<int>() != 1)
    throw DataError("unsupported record schema version");
  RunRecord r;
  r.treatment = j.at("treatment").get<std::string>();
  r.learner = j.at("learner").get<std::string>();
  r.repeat = j.at("repeat").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.metrics.pd = j.at("pd").get<double>();
  r.metrics.pf = j.at("pf").get<double>();
  r.metrics.prec = j.at("prec").get<double>();
  r.metrics.acc = j.at("acc").get<double>();
  r.metrics.f1 = j.at("f1").get<double>();
  r.metrics.g_score = j.at("g_score").get<double>();
  r.oversample_seconds = j.at("oversample_seconds").get<double>();
  r.chosen_params = j.at("chosen_params").get<std::string>();
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

std::vector<RunRecord> load_records(const std::string& dir) {
  std::vector<RunRecord> out;
  const std::filesystem::path path = std::filesystem::path(dir) / "records.jsonl";
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  return run_experiment_on(config, load_csv(config.data_path, config.label_column));
}

std::vector<RunRecord> run_experiment_on(const ExperimentConfig& config, const Dataset& data) {
  if (config.repeats < 1) throw ConfigError("run_experiment: repeats must be >= 1");
  if (config.treatments.empty() || config.learners.empty())
    throw ConfigError("run_experiment: treatments and learners must be nonempty");
  validate(data, true);

  auto emit = [&](const std::string& event) {
    if (config.trace) config.trace(event);
  };

  // resume support: completed (treatment, learner, repeat) cells are skipped
  std::map<std::string, RunRecord> done;
  std::filesystem::path records_path;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    records_path = std::filesystem::path(config.out_dir) / "records.jsonl";
    for (RunRecord& r : load_records(config.out_dir))
      done.emplace(r.treatment + "|" + r.learner + "|" + std::to_string(r.repeat), std::move(r));
  }

  std::ofstream appender;
  if (!records_path.empty())
    appender.open(records_path, std::ios::app);

  TreatmentOptions options = config.options;
  options.bo_iterations = config.bo_iterations;

  std::vector<RunRecord> records;
  for (std::size_t repeat = 0; repeat < config.repeats; ++repeat) {
    SplitSpec split = config.split;
    split.seed = hash64(config.master_seed, "split", repeat);
    SplitResult parts = stratified_split(data, split);
    emit("split repeat=" + std::to_string(repeat));

    for (Treatment treatment : config.treatments) {
      for (LearnerKind learner : config.learners) {
        const std::string key =
            to_string(treatment) + "|" + to_string(learner) + "|" + std::to_string(repeat);
        if (auto it = done.find(key); it != done.end()) {
          records.push_back(it->second);
          continue;
        }

        RunRecord record;
        record.treatment = to_string(treatment);
        record.learner = to_string(learner);
        record.repeat = repeat;
        record.seed = hash64(config.master_seed, repeat, to_string(treatment), to_string(learner));

        try {
          emit("resample treatment=" + record.treatment + " learner=" + record.learner +
               " repeat=" + std::to_string(repeat));
          TreatmentResult result = run_treatment(treatment, parts.train, parts.validation,
                                                 learner, record.seed, options);
          record.oversample_seconds = result.wall_time_seconds;
          record.chosen_params = result.chosen_params;

          emit("fit treatment=" + record.treatment + " learner=" + record.learner +
               " repeat=" + std::to_string(repeat));
          const FittedModel model = fit(learner, result.resampled, hash64(record.seed, "fit"));

          emit("test_access treatment=" + record.treatment + " learner=" + record.learner +
               " repeat=" + std::to_string(repeat));
          const auto predictions = predict(model, parts.test.features);
          record.metrics = score(confusion(parts.test.labels, predictions));
        } catch (const std::exception& e) {
          record.failed = true;
          record.error = e.what();
        }

        if (appender.is_open()) {
          appender << record_to_json(record) << '\n';
          appender.flush();
        }
        records.push_back(std::move(record));
      }
    }
  }
  return records;
}

// ---- reporting ----------------------------------------------------------------

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

long long round_half_up(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

struct MetricDef {
  const char* key;
  const char* label;
  bool higher_better;
  double MetricReport::* field;
};

}  // namespace

std::string report(const std::vector<RunRecord>& records, const ReportOptions& options) {
  if (records.empty()) throw ConfigError("report: no records");

  std::vector<MetricDef> metric_defs = {{"recall", "Recall (pd)", true, &MetricReport::pd},
                                        {"pf", "False Positive Rate (pf)", false, &MetricReport::pf},
                                        {"g_score", "G-Measure", true, &MetricReport::g_score},
                                        {"f1", "F-Measure", true, &MetricReport::f1}};
  if (options.include_precision_accuracy) {
    metric_defs.push_back({"prec", "Precision", true, &MetricReport::prec});
    metric_defs.push_back({"acc", "Accuracy", true, &MetricReport::acc});
  }

  // canonical orders: treatments and learners as first seen in record order
  std::vector<std::string> treatments, learners;
  for (const RunRecord& r : records) {
    if (r.failed) continue;
    if (std::find(treatments.begin(), treatments.end(), r.treatment) == treatments.end())
      treatments.push_back(r.treatment);
    if (std::find(learners.begin(), learners.end(), r.learner) == learners.end())
      learners.push_back(r.learner);
  }
  if (treatments.empty()) throw DataError("report: every record failed");

  // medians[metric][treatment][learner]
  auto cell_values = [&](const std::string& t, const std::string& l,
                         double MetricReport::* field) {
    std::vector<double> v;
    for (const RunRecord& r : records)
      if (!r.failed && r.treatment == t && r.learner == l) v.push_back(r.metrics.*field);
    return v;
  };

  std::map<std::string, std::map<std::string, std::map<std::string, double>>> medians;
  for (const MetricDef& m : metric_defs)
    for (const auto& t : treatments)
      for (const auto& l : learners) {
        auto v = cell_values(t, l, m.field);
        if (!v.empty()) medians[m.key][t][l] = median(std::move(v));
      }

  auto best_of = [&](const MetricDef& m, const std::string& l) {
    std::optional<double> best;
    for (const auto& t : treatments) {
      auto it = medians[m.key][t].find(l);
      if (it == medians[m.key][t].end()) continue;
      if (!best || (m.higher_better ? it->second > *best : it->second < *best)) best = it->second;
    }
    return best;
  };

  // runtime summary: mean oversampling seconds per treatment
  std::map<std::string, double> runtime_mean;
  for (const auto& t : treatments) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const RunRecord& r : records)
      if (!r.failed && r.treatment == t) {
        sum += r.oversample_seconds;
        ++n;
      }
    runtime_mean[t] = n ? sum / static_cast<double>(n) : 0.0;
  }
  auto bucket = [](double seconds) {
    const double minutes = seconds / 60.0;
    return "< " + std::to_string(std::max<long long>(1, static_cast<long long>(std::ceil(
                      minutes <= 0.0 ? 1.0 : minutes))));
  };

  std::ostringstream out;
  if (options.format == ReportFormat::Markdown) {
    for (const MetricDef& m : metric_defs) {
      out << "## " << m.label << "\n\n|Treatment|";
      for (const auto& l : learners) out << l << "|";
      out << "\n|---|";
      for (std::size_t i = 0; i < learners.size(); ++i) out << "---|";
      out << "\n";
      for (const auto& t : treatments) {
        out << "|" << t << "|";
        for (const auto& l : learners) {
          auto it = medians[m.key][t].find(l);
          if (it == medians[m.key][t].end()) {
            out << "-|";
            continue;
          }
          const auto best = best_of(m, l);
          const bool is_best = best && it->second == *best;
          if (is_best)
            out << "**" << round_half_up(it->second) << "**|";
          else
            out << round_half_up(it->second) << "|";
        }
        out << "\n";
      }
      out << "\n";
    }
    out << "## Runtime\n\n|Treatment|Mean oversampling time|\n|---|---|\n";
    for (const auto& t : treatments) {
      if (options.runtime_buckets)
        out << "|" << t << "|" << bucket(runtime_mean[t]) << " min|\n";
      else {
        out << "|" << t << "|";
        out.precision(3);
        out << std::fixed << runtime_mean[t] / 60.0 << " min|\n";
        out.unsetf(std::ios::fixed);
      }
    }
    out << "\nScores are medians over repeats on the 0-100 scale; zero-denominator "
           "ratios are reported as 0. Bold marks the best value per learner column "
           "(all ties).\n";
  } else if (options.format == ReportFormat::Csv) {
    out << "metric,treatment,learner,median,best\n";
    for (const MetricDef& m : metric_defs)
      for (const auto& t : treatments)
        for (const auto& l : learners) {
          auto it = medians[m.key][t].find(l);
          if (it == medians[m.key][t].end()) continue;
          const auto best = best_of(m, l);
          out << m.key << ',' << t << ',' << l << ',' << round_half_up(it->second) << ','
              << ((best && it->second == *best) ? 1 : 0) << "\n";
        }
    for (const auto& t : treatments)
      out << "runtime_seconds," << t << ",," << runtime_mean[t] << ",0\n";
  } else {
    nlohmann::json j;
    for (const MetricDef& m : metric_defs) {
      nlohmann::json jm;
      for (const auto& t : treatments) {
        nlohmann::json jt;
        for (const auto& l : learners) {
          auto it = medians[m.key][t].find(l);
          if (it == medians[m.key][t].end()) continue;
          const auto best = best_of(m, l);
          jt[l] = {{"median", round_half_up(it->second)},
                   {"best", best && it->second == *best}};
        }
        jm[t] = jt;
      }
      j["metrics"][m.key] = jm;
    }
    for (const auto& t : treatments) {
      j["runtime"][t] = {{"mean_seconds", runtime_mean[t]}};
      if (options.runtime_buckets) j["runtime"][t]["bucket_minutes"] = bucket(runtime_mean[t]);
    }
    j["notes"] = "medians over repeats, 0-100 scale; zero-denominator ratios reported as 0";
    out << j.dump(2) << "\n";
  }
  return out.str();
}

}  // namespace rebalance
