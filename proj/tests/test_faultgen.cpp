#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "gridfault/faultgen.hpp"
#include "test_support.hpp"

using namespace gridfault;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("zero variance load sampling is the identity") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee39.csv");
  const GridSpec sampled = sample_loads(spec, 0.0, 99);
  for (int k = 0; k < spec.bus_count(); ++k) {
    CHECK(sampled.bus(k).load == spec.bus(k).load);
  }
  CHECK_THROWS_AS(sample_loads(spec, -0.1, 0), ValidationError);
}

TEST_CASE("load sampling is deterministic in the seed") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee39.csv");
  const GridSpec a = sample_loads(spec, 0.01, 1234);
  const GridSpec b = sample_loads(spec, 0.01, 1234);
  const GridSpec c = sample_loads(spec, 0.01, 1235);
  bool any_differs = false;
  for (int k = 0; k < spec.bus_count(); ++k) {
    CHECK(a.bus(k).load == b.bus(k).load);
    if (a.bus(k).load != c.bus(k).load) any_differs = true;
  }
  CHECK(any_differs);
}

TEST_CASE("sampled load deviations match the configured sigma") {
  const GridSpec spec = parse_case_text(gftest::two_bus_case());
  const double epsilon = 0.01;
  const int draws = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    const GridSpec sampled = sample_loads(spec, epsilon, 1000 + k);
    const double dp = sampled.bus(1).load.real() - spec.bus(1).load.real();
    sum += dp;
    sum_sq += dp * dp;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(sum_sq / draws - mean * mean);
  CHECK(sd == doctest::Approx(std::sqrt(epsilon)).epsilon(0.05));
}

TEST_CASE("flat voltage profile with zero injections and no shunts") {
  const GridSpec spec = parse_case_text(gftest::path_case(5));
  std::vector<Complex> zero_loads(5, Complex(0.0, 0.0));
  const GridSpec unloaded = spec.with_loads(zero_loads);
  const PrefaultSolution pre = solve_prefault(unloaded);
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(pre.u(k) - Complex(1.0, 0.0)) < 1e-12);
  }
}

TEST_CASE("two-bus pre-fault solve matches the hand computation") {
  const GridSpec spec = parse_case_text(gftest::two_bus_case(0.04, 0.2));
  const PrefaultSolution pre = solve_prefault(spec);
  // U2 = 1 + z * (-conj(S2)) with S2 = 0.5 + 0.2j.
  const Complex expected = Complex(1.0, 0.0) +
                           Complex(0.04, 0.2) * Complex(-0.5, 0.2);
  CHECK(std::abs(pre.u(0) - Complex(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(pre.u(1) - expected) < 1e-12);
}

TEST_CASE("68-bus pre-fault residual is tiny") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee68.csv");
  const AdmittanceMatrix y0 = build_admittance(spec);
  const PrefaultSolution pre = solve_prefault(spec, y0);
  const double residual = (y0.y * pre.u - pre.injections).norm();
  CHECK(residual / pre.injections.norm() < 1e-10);
}

TEST_CASE("zero fault admittance leaves the voltages unchanged") {
  SUBCASE("real case, raw solve") {
    const GridSpec spec = parse_case(gftest::data_dir() / "ieee39.csv");
    const AdmittanceMatrix y0 = build_admittance(spec);
    const PrefaultSolution pre = solve_prefault(spec, y0);
    const FaultAugmentedMatrix yf =
        augment_fault(y0, spec, 25, 0.4, Complex(0.0, 0.0));
    const FaultSolution fault = solve_duringfault(yf, pre.injections);
    CHECK((fault.u_bus - pre.u).norm() / pre.u.norm() < 1e-10);
  }
  SUBCASE("zero-shunt toy, pinned fallback") {
    const GridSpec spec = parse_case_text(gftest::two_bus_case(0.0, 0.1));
    const AdmittanceMatrix y0 = build_admittance(spec);
    const PrefaultSolution pre = solve_prefault(spec, y0);
    const FaultAugmentedMatrix yf =
        augment_fault(y0, spec, 1, 0.3, Complex(0.0, 0.0));
    const FaultSolution fault = solve_duringfault(yf, pre.injections);
    CHECK((fault.u_bus - pre.u).norm() < 1e-10);
  }
}

TEST_CASE("severe faults sag the fault-point voltage") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee68.csv");
  const AdmittanceMatrix y0 = build_admittance(spec);
  const PrefaultSolution pre = solve_prefault(spec, y0);
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick_line(0, spec.line_count() - 1);
  std::uniform_real_distribution<double> pick_t(0.05, 0.95);
  for (int round = 0; round < 50; ++round) {
    const Line& line = spec.line(pick_line(rng));
    const FaultAugmentedMatrix yf =
        augment_fault(y0, spec, line.id, pick_t(rng),
                      Complex(1.0 / 0.0001, 0.0));
    const FaultSolution fault = solve_duringfault(yf, pre.injections);
    const double u_i = std::abs(pre.u(yf.from_index));
    const double u_j = std::abs(pre.u(yf.to_index));
    CHECK(std::abs(fault.u_fault_point) < u_i);
    CHECK(std::abs(fault.u_fault_point) < u_j);

    // Block residual of the augmented system.
    CVector x(spec.bus_count() + 1);
    x.head(spec.bus_count()) = fault.u_bus;
    x(spec.bus_count()) = fault.u_fault_point;
    CVector rhs = CVector::Zero(spec.bus_count() + 1);
    rhs.head(spec.bus_count()) = pre.injections;
    const double residual = (yf.base.y * x - rhs).norm() / rhs.norm();
    CHECK(residual < 1e-10);
  }
}

TEST_CASE("constant injections make the complex feature exactly 2-sparse") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee39.csv");
  const AdmittanceMatrix y0 = build_admittance(spec);
  GenerationConfig config;
  config.per_type = 12;
  config.master_seed = 77;
  const Dataset dataset = generate_dataset(spec, config);
  for (const FaultScenario& s : dataset.scenarios) {
    const CVector psi = y0.y * (s.u_fault - s.u_pre);
    const double peak = psi.cwiseAbs().maxCoeff();
    const Line& line = spec.line(s.label);
    const int i = spec.bus_index(line.from);
    const int j = spec.bus_index(line.to);
    for (int k = 0; k < spec.bus_count(); ++k) {
      if (k == i || k == j) continue;
      CHECK(std::abs(psi(k)) < 1e-9 * peak);
    }
    CHECK(std::abs(psi(i)) > 1e-6 * peak);
    CHECK(std::abs(psi(j)) > 1e-6 * peak);
  }
}

TEST_CASE("dataset generation counts, labels, and null classes") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee68.csv");
  GenerationConfig config;
  config.per_type = 172;  // every line twice per fault type
  config.null_count = 20;
  config.master_seed = 5;
  const Dataset dataset = generate_dataset(spec, config);
  CHECK(dataset.scenarios.size() == 4 * 172 + 20);
  CHECK(dataset.line_count == 86);
  int nulls = 0;
  std::vector<int> per_line(86, 0);
  for (const FaultScenario& s : dataset.scenarios) {
    CHECK(s.label >= 0);
    CHECK(s.label <= 86);
    if (s.label == 86) {
      ++nulls;
      CHECK(s.type == FaultType::None);
      CHECK((s.u_fault - s.u_pre).norm() > 0.0);
    } else {
      CHECK(s.type != FaultType::None);
      ++per_line[s.label];
      CHECK(s.z_f >= 0.0001);
      CHECK(s.z_f <= 0.1);
    }
  }
  CHECK(nulls == 20);
  for (int count : per_line) CHECK(count == 8);  // 4 types x 2 rounds
}

TEST_CASE("empty generation config yields an empty dataset") {
  const GridSpec spec = parse_case_text(gftest::two_bus_case());
  GenerationConfig config;
  const Dataset dataset = generate_dataset(spec, config);
  CHECK(dataset.scenarios.empty());
  CHECK(dataset.system == 2);
  CHECK(dataset.line_count == 1);
}

TEST_CASE("identical seeds give byte-identical dataset files") {
  const GridSpec spec = parse_case_text(gftest::path_case(6));
  GenerationConfig config;
  config.per_type = 10;
  config.null_count = 3;
  config.master_seed = 42;
  const auto tmp = std::filesystem::temp_directory_path();
  const auto path_a = tmp / "gf_ds_a.csv";
  const auto path_b = tmp / "gf_ds_b.csv";
  save_dataset(generate_dataset(spec, config), path_a);
  save_dataset(generate_dataset(spec, config), path_b);
  CHECK(slurp(path_a) == slurp(path_b));

  const Dataset loaded = load_dataset(path_a);
  CHECK(loaded.scenarios.size() == 43);
  CHECK(loaded.system == 6);
  CHECK(loaded.line_count == 5);
  const Dataset original = generate_dataset(spec, config);
  for (std::size_t k = 0; k < loaded.scenarios.size(); ++k) {
    CHECK(loaded.scenarios[k].label == original.scenarios[k].label);
    CHECK((loaded.scenarios[k].u_pre - original.scenarios[k].u_pre).norm() ==
          0.0);  // 17 significant digits round-trip exactly
  }
}

TEST_CASE("infinite SNR is the no-noise sentinel") {
  const GridSpec spec = parse_case_text(gftest::path_case(4));
  GenerationConfig config;
  config.per_type = 2;
  config.master_seed = 9;
  const Dataset dataset = generate_dataset(spec, config);
  const Dataset same =
      add_noise(dataset, std::numeric_limits<double>::infinity(), 3);
  for (std::size_t k = 0; k < dataset.scenarios.size(); ++k) {
    CHECK((same.scenarios[k].u_pre - dataset.scenarios[k].u_pre).norm() == 0.0);
  }
}

TEST_CASE("injected noise hits the target SNR") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee39.csv");
  GenerationConfig config;
  config.per_type = 80;  // 320 scenarios -> 12480 noisy entries per snapshot
  config.master_seed = 31;
  const Dataset clean = generate_dataset(spec, config);
  for (double snr_db : {40.0, 60.0}) {
    const Dataset noisy = add_noise(clean, snr_db, 555);
    double signal = 0.0, noise = 0.0;
    for (std::size_t k = 0; k < clean.scenarios.size(); ++k) {
      signal += clean.scenarios[k].u_pre.squaredNorm();
      noise += (noisy.scenarios[k].u_pre - clean.scenarios[k].u_pre)
                   .squaredNorm();
      signal += clean.scenarios[k].u_fault.squaredNorm();
      noise += (noisy.scenarios[k].u_fault - clean.scenarios[k].u_fault)
                   .squaredNorm();
    }
    const double measured = 10.0 * std::log10(signal / noise);
    CHECK(std::abs(measured - snr_db) < 0.5);
  }
}

TEST_CASE("noise draws differ between scenarios under one seed") {
  const GridSpec spec = parse_case_text(gftest::path_case(4));
  GenerationConfig config;
  config.per_type = 2;
  config.master_seed = 9;
  const Dataset clean = generate_dataset(spec, config);
  const Dataset noisy = add_noise(clean, 60.0, 1);
  const CVector delta_a = noisy.scenarios[0].u_pre - clean.scenarios[0].u_pre;
  const CVector delta_b = noisy.scenarios[1].u_pre - clean.scenarios[1].u_pre;
  CHECK((delta_a - delta_b).norm() > 0.0);
}

TEST_CASE("delay corruption boundaries") {
  const GridSpec spec = parse_case(gftest::data_dir() / "ieee39.csv");
  GenerationConfig config;
  config.per_type = 4;
  config.master_seed = 17;
  const Dataset dataset = generate_dataset(spec, config);

  SUBCASE("zero delay leaves the dataset unchanged") {
    const Dataset delayed = apply_delay(dataset, 0.0, 0.0, 1.0, 2);
    for (std::size_t k = 0; k < dataset.scenarios.size(); ++k) {
      CHECK((delayed.scenarios[k].u_fault - dataset.scenarios[k].u_fault)
                .norm() == 0.0);
    }
  }
  SUBCASE("delay beyond the window reports pure pre-fault voltage") {
    const Dataset delayed = apply_delay(dataset, 1000.0, 0.0, 1.0, 2, 0.2);
    for (const FaultScenario& s : delayed.scenarios) {
      CHECK((s.u_fault - s.u_pre).norm() == 0.0);
    }
  }
  SUBCASE("half fraction touches exactly ceil(n/2) buses") {
    const Dataset delayed = apply_delay(dataset, 20.0, 6.0, 0.5, 2);
    for (std::size_t k = 0; k < dataset.scenarios.size(); ++k) {
      int touched = 0;
      for (int bus = 0; bus < spec.bus_count(); ++bus) {
        if (delayed.scenarios[k].u_fault(bus) !=
            dataset.scenarios[k].u_fault(bus)) {
          ++touched;
        }
      }
      CHECK(touched <= (spec.bus_count() + 1) / 2);
      CHECK(touched >= (spec.bus_count() + 1) / 2 - 1);  // w may round to 1
    }
  }
  SUBCASE("fraction outside [0,1] is rejected") {
    CHECK_THROWS_AS(apply_delay(dataset, 20.0, 6.0, 1.5, 2), ValidationError);
  }
}

TEST_CASE("labels always match the line handed to the fault builder") {
  const GridSpec spec = parse_case_text(gftest::path_case(5));
  GenerationConfig config;
  config.per_type = 9;
  config.master_seed = 3;
  const Dataset dataset = generate_dataset(spec, config);
  for (std::size_t k = 0; k < dataset.scenarios.size(); ++k) {
    CHECK(dataset.scenarios[k].label == static_cast<int>(k) % 9 % 4);
  }
}
