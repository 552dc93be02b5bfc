#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "gridfault/experiment.hpp"
#include "test_support.hpp"

using namespace gridfault;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path write_toy_case() {
  const auto path = std::filesystem::temp_directory_path() / "gf_toy_case.csv";
  std::ofstream out(path);
  out << gftest::path_case(6);
  return path;
}

Json base_config(const std::filesystem::path& case_path) {
  Json doc;
  doc["id"] = "toy";
  doc["case"] = case_path.string();
  doc["train"]["generate"]["per_type"] = 15;
  doc["train"]["generate"]["null_count"] = 6;
  doc["test"]["generate"]["per_type"] = 5;
  doc["test"]["generate"]["null_count"] = 2;
  doc["train_config"]["max_steps"] = 600;
  doc["train_config"]["check_period"] = 150;
  doc["train_config"]["batch_size"] = 16;
  doc["train_config"]["learning_rate"] = 0.01;
  doc["seed"] = 4242;
  return doc;
}

EvalReport synthetic_report(const std::string& id, double ratio,
                            double base_lar) {
  EvalReport report;
  report.experiment_id = id;
  report.system = 68;
  report.ratio = ratio;
  report.lar_by_type = {{"TP", base_lar},
                        {"LG", base_lar + 0.01},
                        {"DLG", base_lar - 0.01},
                        {"LL", base_lar + 0.02}};
  report.lar_overall = base_lar;
  report.arc_value = 1.2;
  report.hop = {base_lar, base_lar + 0.05, base_lar + 0.08, 100};
  report.zeta = 0.2;
  return report;
}

}  // namespace

TEST_CASE("an end-to-end toy experiment produces a sane report") {
  const auto case_path = write_toy_case();
  const ExperimentConfig config =
      ExperimentConfig::from_json(base_config(case_path));
  const EvalReport report = run_experiment(config);
  REQUIRE_FALSE(report.failed);
  CHECK(report.system == 6);
  CHECK(report.trained);
  CHECK(report.lar_overall >= 0.0);
  CHECK(report.lar_overall <= 1.0);
  CHECK(report.arc_value >= 1.0);
  CHECK(report.hop.exact <= report.hop.within_one);
  CHECK(report.hop.within_one <= report.hop.within_two);
  CHECK(report.zeta > 0.0);
  CHECK(report.observed_count == 6);
}

TEST_CASE("identical config and seed give byte-identical reports") {
  const auto case_path = write_toy_case();
  const auto dir = std::filesystem::temp_directory_path();
  const ExperimentConfig config =
      ExperimentConfig::from_json(base_config(case_path));
  save_report(run_experiment(config), dir / "gf_report_a.json");
  save_report(run_experiment(config), dir / "gf_report_b.json");
  CHECK(slurp(dir / "gf_report_a.json") == slurp(dir / "gf_report_b.json"));
  CHECK(slurp(dir / "gf_report_a.json").find("\"failed\": false") !=
        std::string::npos);
}

TEST_CASE("a pre-trained model skips training and reproduces the metrics") {
  const auto case_path = write_toy_case();
  const auto dir = std::filesystem::temp_directory_path();
  const auto model_path = dir / "gf_pretrained.gfnm";

  Json first = base_config(case_path);
  first["model_out"] = model_path.string();
  const EvalReport trained =
      run_experiment(ExperimentConfig::from_json(first));
  REQUIRE_FALSE(trained.failed);
  REQUIRE(trained.trained);

  Json second = base_config(case_path);
  second["model_in"] = model_path.string();
  const EvalReport reused =
      run_experiment(ExperimentConfig::from_json(second));
  REQUIRE_FALSE(reused.failed);
  CHECK_FALSE(reused.trained);
  CHECK(reused.lar_overall == trained.lar_overall);
  CHECK(reused.arc_value == trained.arc_value);
}

TEST_CASE("a delay experiment reports nu_d and the window sweep") {
  const auto case_path = write_toy_case();
  Json doc = base_config(case_path);
  doc["delay"]["mean_ms"] = 20.0;
  doc["delay"]["sigma_ms"] = 6.0;
  doc["delay"]["fraction"] = 0.5;
  doc["delay"]["window_s"] = 0.2;
  doc["delay"]["extra_windows"] = {0.05, 0.1, 0.15};
  const EvalReport report =
      run_experiment(ExperimentConfig::from_json(doc));
  REQUIRE_FALSE(report.failed);
  REQUIRE(report.nu_d.has_value());
  REQUIRE(report.delayed_lar.has_value());
  CHECK(*report.nu_d ==
        doctest::Approx(report.lar_overall - *report.delayed_lar));
  REQUIRE(report.nu_f.size() == 3);
  for (const auto& [window, nu] : report.nu_f) {
    CHECK(nu >= 0.0);
    CHECK(window < 0.2);
  }
}

TEST_CASE("stage failures are captured in the report") {
  Json doc = base_config("/nonexistent/case.csv");
  const EvalReport report =
      run_experiment(ExperimentConfig::from_json(doc));
  CHECK(report.failed);
  CHECK(report.failure_stage == "case");
  CHECK_FALSE(report.failure_reason.empty());
}

TEST_CASE("reports round-trip through JSON") {
  const EvalReport report = synthetic_report("rt", 0.25, 0.9);
  const auto path = std::filesystem::temp_directory_path() / "gf_rt.json";
  save_report(report, path);
  const EvalReport loaded = load_report(path);
  CHECK(loaded.experiment_id == "rt");
  CHECK(loaded.ratio == 0.25);
  CHECK(loaded.lar_by_type.size() == 4);
  CHECK(loaded.lar_overall == 0.9);
  CHECK(loaded.hop.evaluated == 100);
}

TEST_CASE("report emission renders the fault-type by ratio grid") {
  std::vector<EvalReport> reports{
      synthetic_report("r15", 0.15, 0.895), synthetic_report("r20", 0.20, 0.93),
      synthetic_report("r25", 0.25, 0.948), synthetic_report("r30", 0.30, 0.95)};
  const auto dir = std::filesystem::temp_directory_path() / "gf_reports";
  const auto written = emit_report(reports, "csv", dir);
  REQUIRE(written.size() == 2);
  const std::string grid = slurp(written[0]);
  std::istringstream lines(grid);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "fault_type,15%,20%,25%,30%");
  int rows = 0;
  std::string row;
  while (std::getline(lines, row)) {
    if (row.empty()) continue;
    ++rows;
    CHECK(std::count(row.begin(), row.end(), ',') == 4);
  }
  CHECK(rows == 4);  // TP, LG, DLG, LL
}

TEST_CASE("report emission handles empty input and bad formats") {
  const auto dir = std::filesystem::temp_directory_path() / "gf_reports_empty";
  const auto written = emit_report({}, "csv", dir);
  const std::string grid = slurp(written[0]);
  CHECK(grid == "fault_type\n");
  CHECK_THROWS_WITH_AS(emit_report({}, "pdf", dir),
                       doctest::Contains("unsupported"), ValidationError);
}

TEST_CASE("svg chart emission is deterministic") {
  std::vector<EvalReport> reports{synthetic_report("a", 0.2, 0.8),
                                  synthetic_report("b", 0.3, 0.9)};
  const auto dir = std::filesystem::temp_directory_path() / "gf_chart";
  const auto first = emit_report(reports, "svg", dir);
  REQUIRE(first.size() == 1);
  const std::string chart_a = slurp(first[0]);
  emit_report(reports, "svg", dir);
  CHECK(chart_a == slurp(first[0]));
  CHECK(chart_a.find("<svg") != std::string::npos);
  CHECK(chart_a.find("<rect") != std::string::npos);
}

TEST_CASE("experiment configs validate observability and classifier") {
  Json doc = base_config("case.csv");
  doc["observability"]["ratio"] = 0.0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc), ValidationError);
  Json doc2 = base_config("case.csv");
  doc2["classifier"] = "svm";
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc2), ValidationError);
  Json doc3 = base_config("case.csv");
  doc3.erase("case");
  CHECK_THROWS_AS(ExperimentConfig::from_json(doc3), ValidationError);
}

TEST_CASE("observability ratio drives a random placement of the right size") {
  const auto case_path = write_toy_case();
  Json doc = base_config(case_path);
  doc["observability"]["ratio"] = 0.5;
  doc["observability"]["algorithm"] = "random";
  const EvalReport report =
      run_experiment(ExperimentConfig::from_json(doc));
  REQUIRE_FALSE(report.failed);
  CHECK(report.observed_count == 3);

  Json bare = base_config(case_path);
  bare["observability"]["ratio"] = 0.5;  // no algorithm: random is implied
  const EvalReport bare_report =
      run_experiment(ExperimentConfig::from_json(bare));
  REQUIRE_FALSE(bare_report.failed);
  CHECK(bare_report.observed_count == 3);
}
