#include "gridfault/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gridfault/rng.hpp"

namespace gridfault {

namespace {

GenerationConfig generation_from_json(const Json& doc) {
  GenerationConfig gen;
  gen.per_type = doc.value("per_type", 0);
  gen.null_count = doc.value("null_count", 0);
  gen.z_min = doc.value("z_min", 1e-4);
  gen.z_max = doc.value("z_max", 0.1);
  gen.t_min = doc.value("t_min", kDefaultTMin);
  gen.epsilon = doc.value("epsilon", 0.01);
  gen.refresh_injections = doc.value("refresh_injections", false);
  gen.master_seed = doc.value("seed", 0ULL);
  if (doc.contains("types")) {
    gen.types.clear();
    for (const auto& t : doc["types"]) {
      gen.types.push_back(fault_type_from_string(t.get<std::string>()));
    }
  }
  return gen;
}

Json generation_to_json(const GenerationConfig& gen) {
  Json doc;
  doc["per_type"] = gen.per_type;
  Json types = Json::array();
  for (FaultType t : gen.types) types.push_back(to_string(t));
  doc["types"] = types;
  doc["null_count"] = gen.null_count;
  doc["z_min"] = gen.z_min;
  doc["z_max"] = gen.z_max;
  doc["t_min"] = gen.t_min;
  doc["epsilon"] = gen.epsilon;
  doc["refresh_injections"] = gen.refresh_injections;
  doc["seed"] = gen.master_seed;
  return doc;
}

TrainConfig train_from_json(const Json& doc) {
  TrainConfig config;
  config.lambda = doc.value("lambda", 0.001);
  config.learning_rate = doc.value("learning_rate", 0.001);
  config.rmsprop_decay = doc.value("rmsprop_decay", 0.9);
  config.check_period = doc.value("check_period", 1000);
  config.patience = doc.value("patience", 4);
  config.batch_size = doc.value("batch_size", 32);
  config.max_steps = doc.value("max_steps", 50000LL);
  config.seed = doc.value("seed", 0ULL);
  return config;
}

Json train_to_json(const TrainConfig& config) {
  Json doc;
  doc["lambda"] = config.lambda;
  doc["learning_rate"] = config.learning_rate;
  doc["rmsprop_decay"] = config.rmsprop_decay;
  doc["check_period"] = config.check_period;
  doc["patience"] = config.patience;
  doc["batch_size"] = config.batch_size;
  doc["max_steps"] = config.max_steps;
  doc["seed"] = config.seed;
  return doc;
}

std::string format_ratio(double ratio) {
  std::ostringstream out;
  out << ratio * 100.0 << "%";
  return out.str();
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  const std::filesystem::path tmp(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& doc) {
  ExperimentConfig config;
  config.experiment_id = doc.value("id", "experiment");
  if (!doc.contains("case")) throw ValidationError("config needs 'case'");
  config.case_file = doc["case"].get<std::string>();

  if (doc.contains("train")) {
    const Json& train = doc["train"];
    if (train.contains("dataset")) {
      config.train_dataset = train["dataset"].get<std::string>();
    }
    if (train.contains("generate")) {
      config.train_gen = generation_from_json(train["generate"]);
    }
    config.split = train.value("split", 0.8);
  }
  if (doc.contains("test")) {
    const Json& test = doc["test"];
    if (test.contains("dataset")) {
      config.test_dataset = test["dataset"].get<std::string>();
    }
    if (test.contains("generate")) {
      config.test_gen = generation_from_json(test["generate"]);
    }
  }

  if (doc.contains("observability")) {
    const Json& obs = doc["observability"];
    config.ratio = obs.value("ratio", 1.0);
    if (!(config.ratio > 0.0 && config.ratio <= 1.0)) {
      throw ValidationError("observability ratio must lie in (0, 1]");
    }
    if (obs.contains("observed")) {
      config.observed = obs["observed"].get<std::vector<int>>();
    }
    if (obs.contains("placement")) {
      config.placement_file = obs["placement"].get<std::string>();
    }
    config.placement_algorithm = obs.value("algorithm", "");
  }

  config.classifier = doc.value("classifier", "cnn");
  if (config.classifier != "cnn" && config.classifier != "nn") {
    throw ValidationError("classifier must be 'cnn' or 'nn'");
  }
  config.standardize = doc.value("standardize", false);
  const std::string part = doc.value("feature_part", "imag");
  if (part == "imag") {
    config.feature_part = FeaturePart::Imaginary;
  } else if (part == "real") {
    config.feature_part = FeaturePart::Real;
  } else {
    throw ValidationError("feature_part must be 'imag' or 'real'");
  }
  if (doc.contains("train_config")) {
    config.train_config = train_from_json(doc["train_config"]);
  }
  if (doc.contains("model_in")) {
    config.model_in = doc["model_in"].get<std::string>();
  }
  if (doc.contains("model_out")) {
    config.model_out = doc["model_out"].get<std::string>();
  }
  if (doc.contains("history_out")) {
    config.history_out = doc["history_out"].get<std::string>();
  }

  if (doc.contains("noise")) {
    const Json& noise = doc["noise"];
    if (noise.contains("snr_db") && noise["snr_db"].is_number()) {
      config.snr_db = noise["snr_db"].get<double>();
    }
  }
  if (doc.contains("delay")) {
    const Json& delay = doc["delay"];
    DelayConfig d;
    d.mean_ms = delay.value("mean_ms", 20.0);
    d.sigma_ms = delay.value("sigma_ms", 6.0);
    d.fraction = delay.value("fraction", 0.5);
    d.window_s = delay.value("window_s", 0.2);
    config.delay = d;
    if (delay.contains("extra_windows")) {
      config.extra_windows = delay["extra_windows"].get<std::vector<double>>();
    }
  }
  config.master_seed = doc.value("seed", 0ULL);
  return config;
}

Json ExperimentConfig::snapshot() const {
  Json doc;
  doc["id"] = experiment_id;
  doc["case"] = case_file.string();
  Json train;
  if (!train_dataset.empty()) train["dataset"] = train_dataset.string();
  if (train_dataset.empty()) train["generate"] = generation_to_json(train_gen);
  train["split"] = split;
  doc["train"] = train;
  Json test;
  if (!test_dataset.empty()) test["dataset"] = test_dataset.string();
  if (test_dataset.empty()) test["generate"] = generation_to_json(test_gen);
  doc["test"] = test;
  Json obs;
  obs["ratio"] = ratio;
  if (!observed.empty()) obs["observed"] = observed;
  if (!placement_file.empty()) obs["placement"] = placement_file.string();
  if (!placement_algorithm.empty()) obs["algorithm"] = placement_algorithm;
  doc["observability"] = obs;
  doc["classifier"] = classifier;
  doc["standardize"] = standardize;
  doc["feature_part"] = feature_part == FeaturePart::Imaginary ? "imag"
                                                               : "real";
  doc["train_config"] = train_to_json(train_config);
  if (!model_in.empty()) doc["model_in"] = model_in.string();
  if (!model_out.empty()) doc["model_out"] = model_out.string();
  if (std::isfinite(snr_db)) {
    Json noise;
    noise["snr_db"] = snr_db;
    doc["noise"] = noise;
  }
  if (delay) {
    Json d;
    d["mean_ms"] = delay->mean_ms;
    d["sigma_ms"] = delay->sigma_ms;
    d["fraction"] = delay->fraction;
    d["window_s"] = delay->window_s;
    if (!extra_windows.empty()) d["extra_windows"] = extra_windows;
    doc["delay"] = d;
  }
  doc["seed"] = master_seed;
  return doc;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double train_share,
                                          std::uint64_t seed) {
  if (!(train_share > 0.0 && train_share < 1.0)) {
    throw ValidationError("train share must lie in (0, 1)");
  }
  std::vector<int> order(dataset.scenarios.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(derive_seed(seed, 0x73706c6974ULL));
  std::shuffle(order.begin(), order.end(), rng);
  const int train_count = std::max(
      1, static_cast<int>(train_share * static_cast<double>(order.size())));
  Dataset train = dataset;
  Dataset val = dataset;
  train.scenarios.clear();
  val.scenarios.clear();
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (static_cast<int>(k) < train_count) {
      train.scenarios.push_back(dataset.scenarios[order[k]]);
    } else {
      val.scenarios.push_back(dataset.scenarios[order[k]]);
    }
  }
  if (val.scenarios.empty()) {
    throw ValidationError("split left the validation set empty");
  }
  return {std::move(train), std::move(val)};
}

EvalPredictions evaluate_model(const Model& model, const LabeledSet& set) {
  EvalPredictions out;
  out.top.reserve(set.size());
  out.rankings.reserve(set.size());
  for (int s = 0; s < set.size(); ++s) {
    RVector row = set.x.row(s);
    Prediction p = predict(model, row);
    out.top.push_back(p.ranking.front());
    out.rankings.push_back(std::move(p.ranking));
  }
  return out;
}

namespace {

struct MetricsBundle {
  std::vector<std::pair<std::string, double>> lar_by_type;
  double lar_overall = 0.0;
  double arc_value = 0.0;
  HopTable hop;
  double null_miss = 0.0;
  double null_false_alarm = 0.0;
};

MetricsBundle compute_metrics(const Dataset& test, const EvalPredictions& pred,
                              const GridSpec& spec) {
  MetricsBundle out;
  std::vector<int> labels;
  labels.reserve(test.scenarios.size());
  for (const auto& s : test.scenarios) labels.push_back(s.label);
  out.lar_overall = lar(pred.top, labels);
  out.arc_value = arc(pred.rankings, labels);
  out.hop = hop_analysis(pred.top, labels, spec);

  const int m = spec.line_count();
  for (FaultType type : {FaultType::TP, FaultType::LG, FaultType::DLG,
                         FaultType::LL, FaultType::None}) {
    std::vector<int> sub_pred, sub_labels;
    for (std::size_t k = 0; k < test.scenarios.size(); ++k) {
      if (test.scenarios[k].type == type) {
        sub_pred.push_back(pred.top[k]);
        sub_labels.push_back(labels[k]);
      }
    }
    if (!sub_labels.empty()) {
      out.lar_by_type.emplace_back(to_string(type),
                                   lar(sub_pred, sub_labels));
    }
  }

  int faulted = 0, faulted_as_null = 0, nulls = 0, null_as_fault = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == m) {
      ++nulls;
      if (pred.top[k] != m) ++null_as_fault;
    } else {
      ++faulted;
      if (pred.top[k] == m) ++faulted_as_null;
    }
  }
  if (faulted > 0) {
    out.null_miss = static_cast<double>(faulted_as_null) / faulted;
  }
  if (nulls > 0) {
    out.null_false_alarm = static_cast<double>(null_as_fault) / nulls;
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& config) {
  EvalReport report;
  report.experiment_id = config.experiment_id;
  report.config_snapshot = config.snapshot();
  report.ratio = config.ratio;

  std::string stage = "setup";
  try {
    stage = "case";
    const GridSpec spec = parse_case(config.case_file);
    const int n = spec.bus_count();
    const int classes = spec.line_count() + 1;
    report.system = n;

    stage = "train-data";
    Dataset train_pool;
    if (!config.train_dataset.empty()) {
      train_pool = load_dataset(config.train_dataset);
    } else {
      GenerationConfig gen = config.train_gen;
      if (gen.master_seed == 0) {
        gen.master_seed = derive_seed(config.master_seed, 0x67656e31ULL);
      }
      train_pool = generate_dataset(spec, gen);
    }
    stage = "test-data";
    Dataset test_set;
    if (!config.test_dataset.empty()) {
      test_set = load_dataset(config.test_dataset);
    } else {
      GenerationConfig gen = config.test_gen;
      if (gen.master_seed == 0) {
        gen.master_seed = derive_seed(config.master_seed, 0x67656e32ULL);
      }
      test_set = generate_dataset(spec, gen);
    }

    stage = "corruption";
    if (std::isfinite(config.snr_db)) {
      train_pool = add_noise(train_pool, config.snr_db,
                             derive_seed(config.master_seed, 0x6e31ULL));
      test_set = add_noise(test_set, config.snr_db,
                           derive_seed(config.master_seed, 0x6e32ULL));
    }

    stage = "observability";
    std::vector<int> observed = config.observed;
    if (observed.empty() && !config.placement_file.empty()) {
      observed = load_placement(config.placement_file).buses;
    }
    std::string algorithm = config.placement_algorithm;
    if (observed.empty() && algorithm.empty() && config.ratio < 1.0) {
      algorithm = "random";  // a bare ratio samples that share of the buses
    }
    if (observed.empty() && !algorithm.empty()) {
      const int k = std::max(
          1, static_cast<int>(std::lround(config.ratio * n)));
      if (algorithm == "random") {
        observed = random_placement(
                       n, k, derive_seed(config.master_seed, 0x706cULL))
                       .buses;
      } else if (algorithm == "two_hop_vc") {
        observed = two_hop_vc(spec).buses;
      } else {
        throw ValidationError("unknown placement algorithm '" + algorithm +
                              "'");
      }
    }
    std::sort(observed.begin(), observed.end());
    report.observed_count = observed.empty() ? n
                                             : static_cast<int>(observed.size());

    stage = "features";
    auto [train_part, val_part] =
        split_dataset(train_pool, config.split, config.master_seed);
    LabeledSet train_features =
        extract_features(train_part, spec, observed, config.feature_part);
    LabeledSet val_features =
        extract_features(val_part, spec, observed, config.feature_part);
    const LabeledSet test_features =
        extract_features(test_set, spec, observed, config.feature_part);

    stage = "model";
    Model model;
    if (!config.model_in.empty()) {
      model = load_model(config.model_in);
      if (model.arch.input_length != n ||
          model.arch.num_classes != classes) {
        throw ValidationError("loaded model does not fit this system");
      }
    } else {
      const ArchitectureSpec arch = config.classifier == "cnn"
                                        ? cnn_architecture(n, classes)
                                        : nn_architecture(n, classes);
      std::optional<FeatureScaler> scaler;
      if (config.standardize) {
        scaler = FeatureScaler::fit(train_features);
        scaler->apply(train_features);
        scaler->apply(val_features);
      }
      TrainConfig tc = config.train_config;
      if (tc.seed == 0) tc.seed = derive_seed(config.master_seed, 0x7463ULL);
      TrainResult result = train(arch, train_features, val_features, tc);
      model = std::move(result.model);
      model.scaler = scaler;  // evaluation inputs stay raw
      report.trained = true;
      if (!config.history_out.empty()) {
        save_history_csv(result.history, config.history_out);
      }
      if (!config.model_out.empty()) save_model(model, config.model_out);
    }

    stage = "metrics";
    const EvalPredictions predictions = evaluate_model(model, test_features);
    const MetricsBundle metrics = compute_metrics(test_set, predictions, spec);
    report.lar_by_type = metrics.lar_by_type;
    report.lar_overall = metrics.lar_overall;
    report.arc_value = metrics.arc_value;
    report.hop = metrics.hop;
    report.null_miss = metrics.null_miss;
    report.null_false_alarm = metrics.null_false_alarm;

    CVector mean_u = CVector::Zero(n);
    for (const auto& s : train_pool.scenarios) mean_u += s.u_pre;
    mean_u /= static_cast<double>(train_pool.scenarios.size());
    std::vector<CVector> test_u;
    test_u.reserve(test_set.scenarios.size());
    for (const auto& s : test_set.scenarios) test_u.push_back(s.u_pre);
    report.zeta = uncertainty_index(test_u, mean_u);

    if (config.delay) {
      stage = "delay";
      const std::uint64_t delay_seed =
          derive_seed(config.master_seed, 0x64ULL);
      Dataset delayed =
          apply_delay(test_set, config.delay->mean_ms, config.delay->sigma_ms,
                      config.delay->fraction, delay_seed,
                      config.delay->window_s);
      const LabeledSet delayed_features =
          extract_features(delayed, spec, observed, config.feature_part);
      const EvalPredictions delayed_pred =
          evaluate_model(model, delayed_features);
      std::vector<int> labels;
      for (const auto& s : test_set.scenarios) labels.push_back(s.label);
      report.delayed_lar = lar(delayed_pred.top, labels);
      report.nu_d = report.lar_overall - *report.delayed_lar;

      // The nu_f sweep compares shortened fault windows against the
      // reference-window delayed accuracy, with the same delay draws.
      for (double window : config.extra_windows) {
        Dataset windowed =
            apply_delay(test_set, config.delay->mean_ms,
                        config.delay->sigma_ms, config.delay->fraction,
                        delay_seed, window);
        const EvalPredictions window_pred = evaluate_model(
            model,
            extract_features(windowed, spec, observed, config.feature_part));
        const double eta_f = lar(window_pred.top, labels);
        report.nu_f.emplace_back(window,
                                 std::abs(*report.delayed_lar - eta_f));
      }
    }
  } catch (const std::exception& err) {
    report.failed = true;
    report.failure_stage = stage;
    report.failure_reason = err.what();
  }
  return report;
}

Json report_to_json(const EvalReport& report) {
  Json doc;
  doc["id"] = report.experiment_id;
  doc["failed"] = report.failed;
  if (report.failed) {
    doc["failure_stage"] = report.failure_stage;
    doc["failure_reason"] = report.failure_reason;
  }
  doc["system"] = report.system;
  doc["ratio"] = report.ratio;
  doc["observed_count"] = report.observed_count;
  doc["trained"] = report.trained;
  Json by_type;
  for (const auto& [type, value] : report.lar_by_type) by_type[type] = value;
  doc["lar_by_type"] = by_type;
  doc["lar"] = report.lar_overall;
  doc["arc"] = report.arc_value;
  Json hop;
  hop["exact"] = report.hop.exact;
  hop["within_one"] = report.hop.within_one;
  hop["within_two"] = report.hop.within_two;
  hop["evaluated"] = report.hop.evaluated;
  doc["hop"] = hop;
  doc["zeta"] = report.zeta;
  doc["null_miss"] = report.null_miss;
  doc["null_false_alarm"] = report.null_false_alarm;
  if (report.delayed_lar) doc["delayed_lar"] = *report.delayed_lar;
  if (report.nu_d) doc["nu_d"] = *report.nu_d;
  if (!report.nu_f.empty()) {
    Json nu_f = Json::array();
    for (const auto& [window, value] : report.nu_f) {
      Json entry;
      entry["window_s"] = window;
      entry["nu_f"] = value;
      nu_f.push_back(entry);
    }
    doc["nu_f"] = nu_f;
  }
  doc["config"] = report.config_snapshot;
  return doc;
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  write_text_atomic(path, report_to_json(report).dump(2) + "\n");
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report " + path.string());
  Json doc = Json::parse(in);
  EvalReport report;
  report.experiment_id = doc.value("id", "");
  report.failed = doc.value("failed", false);
  report.failure_stage = doc.value("failure_stage", "");
  report.failure_reason = doc.value("failure_reason", "");
  report.system = doc.value("system", 0);
  report.ratio = doc.value("ratio", 1.0);
  report.observed_count = doc.value("observed_count", 0);
  report.trained = doc.value("trained", false);
  if (doc.contains("lar_by_type")) {
    for (const auto& [key, value] : doc["lar_by_type"].items()) {
      report.lar_by_type.emplace_back(key, value.get<double>());
    }
  }
  report.lar_overall = doc.value("lar", 0.0);
  report.arc_value = doc.value("arc", 0.0);
  if (doc.contains("hop")) {
    report.hop.exact = doc["hop"].value("exact", 0.0);
    report.hop.within_one = doc["hop"].value("within_one", 0.0);
    report.hop.within_two = doc["hop"].value("within_two", 0.0);
    report.hop.evaluated = doc["hop"].value("evaluated", 0);
  }
  report.zeta = doc.value("zeta", 0.0);
  report.null_miss = doc.value("null_miss", 0.0);
  report.null_false_alarm = doc.value("null_false_alarm", 0.0);
  if (doc.contains("delayed_lar")) {
    report.delayed_lar = doc["delayed_lar"].get<double>();
  }
  if (doc.contains("nu_d")) report.nu_d = doc["nu_d"].get<double>();
  if (doc.contains("nu_f")) {
    for (const auto& entry : doc["nu_f"]) {
      report.nu_f.emplace_back(entry.value("window_s", 0.0),
                               entry.value("nu_f", 0.0));
    }
  }
  if (doc.contains("config")) report.config_snapshot = doc["config"];
  return report;
}

namespace {

std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string lar_table_csv(const std::vector<EvalReport>& reports) {
  std::vector<std::string> types;
  for (const EvalReport& report : reports) {
    for (const auto& [type, _] : report.lar_by_type) {
      if (std::find(types.begin(), types.end(), type) == types.end()) {
        types.push_back(type);
      }
    }
  }
  std::string text = "fault_type";
  for (const EvalReport& report : reports) {
    text += "," + format_ratio(report.ratio);
  }
  text += "\n";
  for (const std::string& type : types) {
    text += type;
    for (const EvalReport& report : reports) {
      double value = std::numeric_limits<double>::quiet_NaN();
      for (const auto& [t, v] : report.lar_by_type) {
        if (t == type) value = v;
      }
      text += ",";
      if (std::isfinite(value)) text += csv_double(value);
    }
    text += "\n";
  }
  return text;
}

std::string metrics_csv(const std::vector<EvalReport>& reports) {
  std::string text =
      "id,system,ratio,observed,lar,arc,hop_exact,hop_within_one,"
      "hop_within_two,zeta,null_miss,null_false_alarm,delayed_lar,nu_d\n";
  for (const EvalReport& r : reports) {
    text += r.experiment_id + "," + std::to_string(r.system) + "," +
            csv_double(r.ratio) + "," + std::to_string(r.observed_count) +
            "," + csv_double(r.lar_overall) + "," + csv_double(r.arc_value) +
            "," + csv_double(r.hop.exact) + "," +
            csv_double(r.hop.within_one) + "," +
            csv_double(r.hop.within_two) + "," + csv_double(r.zeta) + "," +
            csv_double(r.null_miss) + "," + csv_double(r.null_false_alarm) +
            ",";
    if (r.delayed_lar) text += csv_double(*r.delayed_lar);
    text += ",";
    if (r.nu_d) text += csv_double(*r.nu_d);
    text += "\n";
  }
  return text;
}

std::string lar_chart_svg(const std::vector<EvalReport>& reports) {
  const int bar_width = 60;
  const int gap = 20;
  const int height = 240;
  const int base = 200;
  const int width =
      gap + static_cast<int>(reports.size()) * (bar_width + gap) + gap;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\">\n";
  svg += "<line x1=\"10\" y1=\"" + std::to_string(base) + "\" x2=\"" +
         std::to_string(width - 10) + "\" y2=\"" + std::to_string(base) +
         "\" stroke=\"black\"/>\n";
  int x = gap;
  for (const EvalReport& r : reports) {
    const int bar = static_cast<int>(r.lar_overall * 160.0);
    svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" +
           std::to_string(base - bar) + "\" width=\"" +
           std::to_string(bar_width) + "\" height=\"" + std::to_string(bar) +
           "\" fill=\"#4477aa\"/>\n";
    svg += "<text x=\"" + std::to_string(x + bar_width / 2) + "\" y=\"" +
           std::to_string(base + 16) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + r.experiment_id +
           "</text>\n";
    svg += "<text x=\"" + std::to_string(x + bar_width / 2) + "\" y=\"" +
           std::to_string(base - bar - 4) +
           "\" font-size=\"10\" text-anchor=\"middle\">" +
           csv_double(std::round(r.lar_overall * 1000.0) / 1000.0) +
           "</text>\n";
    x += bar_width + gap;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

std::vector<std::filesystem::path> emit_report(
    const std::vector<EvalReport>& reports, const std::string& format,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  if (format == "csv") {
    const auto lar_path = out_dir / "lar_by_type.csv";
    write_text_atomic(lar_path, lar_table_csv(reports));
    written.push_back(lar_path);
    const auto metrics_path = out_dir / "metrics.csv";
    write_text_atomic(metrics_path, metrics_csv(reports));
    written.push_back(metrics_path);
  } else if (format == "svg") {
#ifdef GRIDFAULT_NO_CHARTS
    throw ValidationError("chart output not compiled in");
#else
    const auto chart_path = out_dir / "lar_chart.svg";
    write_text_atomic(chart_path, lar_chart_svg(reports));
    written.push_back(chart_path);
#endif
  } else {
    throw ValidationError("unsupported report format '" + format + "'");
  }
  return written;
}

}  // namespace gridfault
