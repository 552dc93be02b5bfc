#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridfault/cnn.hpp"
#include "gridfault/metrics.hpp"
#include "gridfault/placement.hpp"
#include "nlohmann/json.hpp"

namespace gridfault {

using Json = nlohmann::ordered_json;

/// One end-to-end run: data, observability, classifier, corruptions.
/// Parsed from the JSON config schema documented in the README.
struct ExperimentConfig {
  std::string experiment_id;
  std::filesystem::path case_file;

  std::filesystem::path train_dataset;  // load when set, else generate
  std::filesystem::path test_dataset;
  GenerationConfig train_gen;
  GenerationConfig test_gen;

  double split = 0.8;  // train share of the training pool

  double ratio = 1.0;
  std::vector<int> observed;  // explicit measured bus ids
  std::filesystem::path placement_file;
  std::string placement_algorithm;  // "random" | "two_hop_vc" | ""

  std::string classifier = "cnn";  // "cnn" | "nn"
  bool standardize = false;        // per-feature scaling fit on training data
  FeaturePart feature_part = FeaturePart::Imaginary;
  TrainConfig train_config;
  std::filesystem::path model_in;
  std::filesystem::path model_out;
  std::filesystem::path history_out;

  double snr_db = std::numeric_limits<double>::infinity();
  std::optional<DelayConfig> delay;
  std::vector<double> extra_windows;  // fault windows for the nu_f sweep

  std::uint64_t master_seed = 0;

  static ExperimentConfig from_json(const Json& doc);
  Json snapshot() const;
};

struct EvalReport {
  std::string experiment_id;
  Json config_snapshot;
  int system = 0;
  double ratio = 1.0;
  int observed_count = 0;

  std::vector<std::pair<std::string, double>> lar_by_type;
  double lar_overall = 0.0;
  double arc_value = 0.0;
  HopTable hop;
  double zeta = 0.0;
  double null_miss = 0.0;         // faulted cases predicted as null
  double null_false_alarm = 0.0;  // null cases predicted as a line

  std::optional<double> delayed_lar;
  std::optional<double> nu_d;
  std::vector<std::pair<double, double>> nu_f;  // window_s -> |eta - eta_f|

  bool trained = false;
  bool failed = false;
  std::string failure_stage;
  std::string failure_reason;
};

/// Run every stage from data to metrics; failures are captured in the report
/// rather than thrown. Fully reproducible from (config, master_seed).
EvalReport run_experiment(const ExperimentConfig& config);

Json report_to_json(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

/// Emit CSV tables (and an SVG LAR chart when requested) for one or more
/// reports. Supported formats: "csv", "svg".
std::vector<std::filesystem::path> emit_report(
    const std::vector<EvalReport>& reports, const std::string& format,
    const std::filesystem::path& out_dir);

/// Classify every scenario and return (top prediction, full ranking) pairs.
struct EvalPredictions {
  std::vector<int> top;
  std::vector<std::vector<int>> rankings;
};
EvalPredictions evaluate_model(const Model& model, const LabeledSet& set);

/// Deterministic shuffled split of a dataset into train and validation parts.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double train_share,
                                          std::uint64_t seed);

}  // namespace gridfault
