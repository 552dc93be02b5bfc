#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>

#include "gridfault/experiment.hpp"
#include "gridfault/rng.hpp"

namespace gf = gridfault;
using Json = gf::Json;

namespace {

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gf::ValidationError("cannot open config " + path);
  return Json::parse(in);
}

std::string out_path(const Json& config, const std::string& key,
                     const std::optional<std::string>& out_dir,
                     const std::string& fallback) {
  std::string path = config.value(key, fallback);
  if (out_dir) {
    return (std::filesystem::path(*out_dir) /
            std::filesystem::path(path).filename())
        .string();
  }
  return path;
}

int run_generate(const Json& config, std::optional<std::uint64_t> seed,
                 const std::optional<std::string>& out_dir) {
  const gf::GridSpec spec = gf::parse_case(config.at("case").get<std::string>());
  gf::GenerationConfig gen;
  if (config.contains("scenarios")) {
    const Json& s = config["scenarios"];
    gen.per_type = s.value("per_type", 0);
    gen.null_count = s.value("null_count", 0);
    gen.z_min = s.value("z_min", 1e-4);
    gen.z_max = s.value("z_max", 0.1);
    gen.t_min = s.value("t_min", gf::kDefaultTMin);
    gen.epsilon = s.value("epsilon", 0.01);
    gen.refresh_injections = s.value("refresh_injections", false);
    if (s.contains("types")) {
      gen.types.clear();
      for (const auto& t : s["types"]) {
        gen.types.push_back(gf::fault_type_from_string(t.get<std::string>()));
      }
    }
  }
  gen.master_seed = seed.value_or(config.value("seed", 0ULL));

  gf::Dataset dataset = gf::generate_dataset(spec, gen);
  if (config.contains("noise")) {
    const double snr = config["noise"].value("snr_db", 0.0);
    dataset = gf::add_noise(dataset, snr,
                            gf::derive_seed(gen.master_seed, 0x6e6fULL));
  }
  if (config.contains("delay")) {
    const Json& d = config["delay"];
    dataset = gf::apply_delay(dataset, d.value("mean_ms", 20.0),
                              d.value("sigma_ms", 6.0),
                              d.value("fraction", 0.5),
                              gf::derive_seed(gen.master_seed, 0x64ULL),
                              d.value("window_s", 0.2));
  }
  const std::string path = out_path(config, "out", out_dir, "dataset.csv");
  gf::save_dataset(dataset, path);
  std::cout << "wrote " << dataset.scenarios.size() << " scenarios to " << path
            << "\n";
  return 0;
}

int run_train(const Json& config, std::optional<std::uint64_t> seed,
              const std::optional<std::string>& out_dir) {
  const gf::GridSpec spec = gf::parse_case(config.at("case").get<std::string>());
  gf::Dataset pool = gf::load_dataset(config.at("dataset").get<std::string>());
  const std::uint64_t master = seed.value_or(config.value("seed", 0ULL));

  std::vector<int> observed;
  if (config.contains("observed")) {
    observed = config["observed"].get<std::vector<int>>();
  } else if (config.contains("placement")) {
    observed =
        gf::load_placement(config["placement"].get<std::string>()).buses;
  }

  auto [train_part, val_part] =
      gf::split_dataset(pool, config.value("split", 0.8), master);
  const gf::LabeledSet train_set =
      gf::extract_features(train_part, spec, observed);
  const gf::LabeledSet val_set = gf::extract_features(val_part, spec, observed);

  const std::string classifier = config.value("classifier", "cnn");
  const int classes = spec.line_count() + 1;
  const gf::ArchitectureSpec arch =
      classifier == "nn" ? gf::nn_architecture(spec.bus_count(), classes)
                         : gf::cnn_architecture(spec.bus_count(), classes);

  gf::TrainConfig tc;
  if (config.contains("train")) {
    const Json& t = config["train"];
    tc.lambda = t.value("lambda", 0.001);
    tc.learning_rate = t.value("learning_rate", 0.001);
    tc.rmsprop_decay = t.value("rmsprop_decay", 0.9);
    tc.check_period = t.value("check_period", 1000);
    tc.patience = t.value("patience", 4);
    tc.batch_size = t.value("batch_size", 32);
    tc.max_steps = t.value("max_steps", 50000LL);
  }
  tc.seed = gf::derive_seed(master, 0x7463ULL);

  std::optional<gf::FeatureScaler> scaler;
  gf::LabeledSet train_ready = train_set;
  gf::LabeledSet val_ready = val_set;
  if (config.value("standardize", false)) {
    scaler = gf::FeatureScaler::fit(train_ready);
    scaler->apply(train_ready);
    scaler->apply(val_ready);
  }
  gf::TrainResult result = gf::train(arch, train_ready, val_ready, tc);
  result.model.scaler = scaler;
  const std::string model_path =
      out_path(config, "model_out", out_dir, "model.gfnm");
  gf::save_model(result.model, model_path);
  if (config.contains("history_out")) {
    gf::save_history_csv(result.history,
                         out_path(config, "history_out", out_dir,
                                  "history.csv"));
  }
  std::cout << "trained " << classifier << " to validation loss "
            << result.best_val_loss << " in " << result.stopped_step
            << " steps; model at " << model_path << "\n";
  return 0;
}

int run_place(const Json& config, std::optional<std::uint64_t> seed,
              const std::optional<std::string>& out_dir) {
  const gf::GridSpec spec = gf::parse_case(config.at("case").get<std::string>());
  const std::string algorithm = config.value("algorithm", "greedy");
  const std::uint64_t master = seed.value_or(config.value("seed", 0ULL));

  gf::PlacementSet placement;
  if (algorithm == "random") {
    placement = gf::random_placement(spec.bus_count(),
                                     config.value("k", spec.bus_count()),
                                     master);
  } else if (algorithm == "two_hop_vc") {
    placement = gf::two_hop_vc(spec);
  } else if (algorithm == "greedy") {
    gf::Dataset pool = gf::load_dataset(config.at("dataset").get<std::string>());
    auto [train_part, val_part] =
        gf::split_dataset(pool, config.value("split", 0.8), master);
    std::vector<int> initial;
    if (config.contains("initial") && config["initial"].is_array()) {
      initial = config["initial"].get<std::vector<int>>();
    } else {
      initial = gf::default_initial_set(spec);
    }
    gf::TrainConfig budget;
    if (config.contains("budget")) {
      const Json& b = config["budget"];
      budget.lambda = b.value("lambda", 0.001);
      budget.learning_rate = b.value("learning_rate", 0.002);
      budget.rmsprop_decay = b.value("rmsprop_decay", 0.9);
      budget.check_period = b.value("check_period", 100);
      budget.patience = b.value("patience", 2);
      budget.batch_size = b.value("batch_size", 32);
      budget.max_steps = b.value("max_steps", 400LL);
    }
    budget.seed = master;
    const gf::ArchitectureSpec arch = gf::cnn_architecture(
        spec.bus_count(), spec.line_count() + 1);
    placement = gf::greedy_placement(
        spec, train_part, val_part, arch, config.value("k", 12),
        config.value("beta", 0.5), initial, budget,
        config.value("threads", 1), config.value("standardize", false));
  } else {
    throw gf::ValidationError("unknown placement algorithm '" + algorithm +
                              "'");
  }
  const std::string path = out_path(config, "out", out_dir, "placement.json");
  gf::save_placement(placement, path);
  std::cout << "placed " << placement.buses.size() << " buses ("
            << placement.algorithm << ") at " << path << "\n";
  return 0;
}

int run_evaluate(const Json& config, std::optional<std::uint64_t> seed,
                 const std::optional<std::string>& out_dir) {
  Json doc = config;
  if (seed) doc["seed"] = *seed;
  const gf::ExperimentConfig experiment = gf::ExperimentConfig::from_json(doc);
  const gf::EvalReport report = gf::run_experiment(experiment);
  const std::string path = out_path(config, "out", out_dir, "report.json");
  gf::save_report(report, path);
  if (report.failed) {
    std::cerr << "experiment failed at stage " << report.failure_stage << ": "
              << report.failure_reason << "\n";
    return 2;
  }
  std::cout << "report " << report.experiment_id << ": LAR "
            << report.lar_overall << ", ARC " << report.arc_value << " -> "
            << path << "\n";
  return 0;
}

int run_report(const Json& config, const std::optional<std::string>& out_dir) {
  std::vector<gf::EvalReport> reports;
  for (const auto& entry : config.at("reports")) {
    reports.push_back(gf::load_report(entry.get<std::string>()));
  }
  std::vector<std::string> formats{"csv"};
  if (config.contains("formats")) {
    formats = config["formats"].get<std::vector<std::string>>();
  }
  const std::string dir = out_dir.value_or(config.value("out", "reports"));
  for (const std::string& format : formats) {
    for (const auto& path : gf::emit_report(reports, format, dir)) {
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Faulted-line localization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--seed", seed, "master seed override");
    cmd->add_option("--out", out_dir, "output directory override");
  };

  CLI::App* generate = app.add_subcommand("generate", "generate a dataset");
  CLI::App* train = app.add_subcommand("train", "train a classifier");
  CLI::App* place = app.add_subcommand("place", "select measured buses");
  CLI::App* evaluate = app.add_subcommand("evaluate", "run an experiment");
  CLI::App* report = app.add_subcommand("report", "render report tables");
  for (CLI::App* cmd : {generate, train, place, evaluate, report}) {
    add_common(cmd);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const Json config = load_config(config_path);
    if (generate->parsed()) return run_generate(config, seed, out_dir);
    if (train->parsed()) return run_train(config, seed, out_dir);
    if (place->parsed()) return run_place(config, seed, out_dir);
    if (evaluate->parsed()) return run_evaluate(config, seed, out_dir);
    if (report->parsed()) return run_report(config, out_dir);
  } catch (const gf::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const Json::exception& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "failure: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
