// rebalance: resample class-imbalanced CSV datasets and compare treatments
// across baseline classifiers.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rebalance/errors.hpp"
#include "rebalance/pipeline.hpp"

namespace {

using namespace rebalance;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  throw ConfigError("unknown report format: " + name);
}

int run_command(const std::string& data, const std::string& label, const std::string& treatments,
                const std::string& learners, std::size_t repeats, std::size_t bo_iters,
                std::uint64_t seed, const std::string& out_dir, const std::string& format,
                bool with_prec_acc, bool runtime_buckets) {
  ExperimentConfig config;
  config.data_path = data;
  config.label_column = label;
  config.repeats = repeats;
  config.bo_iterations = bo_iters;
  config.master_seed = seed;
  config.out_dir = out_dir;
  if (treatments != "default") {
    config.treatments.clear();
    for (const auto& name : split_list(treatments))
      config.treatments.push_back(treatment_from_string(name));
  }
  if (learners != "all") {
    config.learners.clear();
    for (const auto& name : split_list(learners))
      config.learners.push_back(learner_from_string(name));
  }

  const auto records = run_experiment(config);

  ReportOptions opts;
  opts.format = parse_format(format);
  opts.include_precision_accuracy = with_prec_acc;
  opts.runtime_buckets = runtime_buckets;
  const std::string rendered = report(records, opts);
  std::cout << rendered;

  if (!out_dir.empty()) {
    const char* ext = opts.format == ReportFormat::Csv
                          ? "csv"
                          : (opts.format == ReportFormat::Json ? "json" : "md");
    std::ofstream f(std::filesystem::path(out_dir) / (std::string("report.") + ext));
    f << rendered;
  }

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  if (failed > 0)
    std::cerr << "warning: " << failed << " of " << records.size()
              << " cells failed and were recorded with their error\n";
  return kExitOk;
}

int resample_command(const std::string& data, const std::string& label,
                     const std::string& treatment_name, std::uint64_t seed,
                     const std::string& out_path) {
  const Treatment treatment = treatment_from_string(treatment_name);
  const Dataset full = load_csv(data, label);

  Dataset resampled;
  if (treatment == Treatment::Smotuned || treatment == Treatment::Dazzle) {
    // these two tune against a validation partition, so derive one
    SplitSpec split;
    split.seed = seed;
    const SplitResult parts = stratified_split(full, split);
    resampled =
        run_treatment(treatment, parts.train, parts.validation, LearnerKind::Knn, seed).resampled;
  } else {
    Dataset empty_validation;
    resampled = run_treatment(treatment, full, empty_validation, LearnerKind::Knn, seed).resampled;
  }
  save_csv(resampled, out_path, label);
  std::cout << "wrote " << resampled.rows() << " rows (" << resampled.minority_count()
            << " minority) to " << out_path << "\n";
  return kExitOk;
}

int report_command(const std::string& records_dir, const std::string& format, bool with_prec_acc,
                   bool runtime_buckets) {
  const auto records = load_records(records_dir);
  if (records.empty()) throw DataError("no records found under " + records_dir);
  ReportOptions opts;
  opts.format = parse_format(format);
  opts.include_precision_accuracy = with_prec_acc;
  opts.runtime_buckets = runtime_buckets;
  std::cout << report(records, opts);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rebalance: oversampling treatments and classifier comparison for "
               "class-imbalanced tabular datasets"};
  app.require_subcommand(1);

  std::string data, label = "label", out_dir, out_path, records_dir;
  std::string treatments = "default", learners = "all", treatment_name = "smote";
  std::string format = "markdown";
  std::size_t repeats = 10, bo_iters = 30;
  std::uint64_t seed = 0;
  bool with_prec_acc = false, runtime_buckets = false;

  CLI::App* run = app.add_subcommand("run", "run the full treatment x learner experiment");
  run->add_option("--data", data, "input CSV path")->required();
  run->add_option("--label", label, "label column name");
  run->add_option("--treatments", treatments,
                  "comma-separated treatment list, or 'default' (Table set)");
  run->add_option("--learners", learners, "comma-separated learner list, or 'all'");
  run->add_option("--repeats", repeats, "experiment repeats");
  run->add_option("--bo-iters", bo_iters, "Bayesian-optimization iterations per dazzle cell");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory (records + report; enables resume)");
  run->add_option("--format", format, "report format: csv|json|markdown");
  run->add_flag("--with-prec-acc", with_prec_acc, "include precision and accuracy columns");
  run->add_flag("--runtime-buckets", runtime_buckets, "render runtimes as '< N min' buckets");

  CLI::App* resample = app.add_subcommand("resample", "export one resampled training set as CSV");
  resample->add_option("--data", data, "input CSV path")->required();
  resample->add_option("--label", label, "label column name");
  resample->add_option("--treatment", treatment_name, "treatment name")->required();
  resample->add_option("--seed", seed, "seed");
  resample->add_option("--out", out_path, "output CSV path")->required();

  CLI::App* rep = app.add_subcommand("report", "render a report from stored records");
  rep->add_option("--records", records_dir, "directory holding records.jsonl")->required();
  rep->add_option("--format", format, "report format: csv|json|markdown|md");
  rep->add_flag("--with-prec-acc", with_prec_acc, "include precision and accuracy columns");
  rep->add_flag("--runtime-buckets", runtime_buckets, "render runtimes as '< N min' buckets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run->parsed())
      return run_command(data, label, treatments, learners, repeats, bo_iters, seed, out_dir,
                         format, with_prec_acc, runtime_buckets);
    if (resample->parsed()) return resample_command(data, label, treatment_name, seed, out_path);
    return report_command(records_dir, format, with_prec_acc, runtime_buckets);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
