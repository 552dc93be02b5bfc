#include "gridfault/faultgen.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridfault/rng.hpp"
#include "nlohmann/json.hpp"

namespace gridfault {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kRcondFloor = 1e-13;

struct LuSolve {
  CVector x;
  double rcond = 0.0;
};

LuSolve lu_solve(const CMatrix& a, const CVector& b) {
  Eigen::PartialPivLU<CMatrix> lu(a);
  const auto& packed = lu.matrixLU();
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (int i = 0; i < packed.rows(); ++i) {
    double d = std::abs(packed(i, i));
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  LuSolve out;
  out.rcond = dmax > 0.0 ? dmin / dmax : 0.0;
  if (out.rcond >= kRcondFloor) out.x = lu.solve(b);
  return out;
}

CVector raw_injections(const GridSpec& spec) {
  CVector i0(spec.bus_count());
  for (int k = 0; k < spec.bus_count(); ++k) {
    i0(k) = -std::conj(spec.bus(k).load);
  }
  return i0;
}

double format_guard(double v) { return v == 0.0 ? 0.0 : v; }  // kill -0

void append_double(std::string& row, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", format_guard(v));
  row += buf;
}

double parse_field(std::string_view token, int line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("dataset line " + std::to_string(line_no) +
                          ": bad number '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

const char* to_string(FaultType type) {
  switch (type) {
    case FaultType::TP: return "TP";
    case FaultType::LG: return "LG";
    case FaultType::DLG: return "DLG";
    case FaultType::LL: return "LL";
    case FaultType::None: return "NONE";
  }
  return "NONE";
}

FaultType fault_type_from_string(const std::string& name) {
  if (name == "TP") return FaultType::TP;
  if (name == "LG") return FaultType::LG;
  if (name == "DLG") return FaultType::DLG;
  if (name == "LL") return FaultType::LL;
  if (name == "NONE") return FaultType::None;
  throw ValidationError("unknown fault type '" + name + "'");
}

double fault_severity_factor(FaultType type) {
  switch (type) {
    case FaultType::TP: return 1.0;
    case FaultType::LG: return 1.0 / 3.0;
    case FaultType::DLG: return 2.0 / 3.0;
    case FaultType::LL: return 0.5;
    case FaultType::None: return 0.0;
  }
  return 0.0;
}

GridSpec sample_loads(const GridSpec& spec, double epsilon,
                      std::uint64_t seed) {
  if (epsilon < 0.0) throw ValidationError("epsilon must be nonnegative");
  if (epsilon == 0.0) return spec;
  Rng rng = make_rng(derive_seed(seed, 0x6c6f6164ULL));
  std::normal_distribution<double> noise(0.0, std::sqrt(epsilon));
  std::vector<Complex> loads(spec.bus_count());
  for (int k = 0; k < spec.bus_count(); ++k) {
    double dp = noise(rng);
    double dq = noise(rng);
    loads[k] = spec.bus(k).load + Complex(dp, dq);
  }
  return spec.with_loads(std::move(loads));
}

PrefaultSolution solve_prefault(const GridSpec& spec) {
  return solve_prefault(spec, build_admittance(spec));
}

PrefaultSolution solve_prefault(const GridSpec& spec,
                                const AdmittanceMatrix& y0) {
  const int ref = 0;  // first bus listed
  CMatrix a = y0.y;
  CVector rhs = raw_injections(spec);
  a.row(ref).setZero();
  a(ref, ref) = 1.0;
  rhs(ref) = Complex(1.0, 0.0);
  LuSolve solve = lu_solve(a, rhs);
  if (solve.x.size() == 0) {
    throw ComputeError("pre-fault system singular (rcond ~ " +
                       std::to_string(solve.rcond) + ")");
  }
  PrefaultSolution out;
  out.u = std::move(solve.x);
  out.injections = y0.y * out.u;
  return out;
}

FaultSolution solve_duringfault(const FaultAugmentedMatrix& yf,
                                const CVector& injections,
                                int reference_index,
                                Complex reference_voltage) {
  const int n = yf.base.dimension() - 1;
  if (injections.size() != n) {
    throw ValidationError("injection vector length does not match grid");
  }
  CVector rhs(n + 1);
  rhs.head(n) = injections;
  rhs(n) = Complex(0.0, 0.0);

  LuSolve solve = lu_solve(yf.base.y, rhs);
  if (solve.x.size() == 0) {
    // Zero-shunt networks with y_fault = 0 have a constant-shift null space;
    // pin the reference to its pre-fault voltage instead.
    CMatrix a = yf.base.y;
    a.row(reference_index).setZero();
    a(reference_index, reference_index) = 1.0;
    rhs(reference_index) = reference_voltage;
    solve = lu_solve(a, rhs);
    if (solve.x.size() == 0) {
      throw ComputeError("during-fault system singular (rcond ~ " +
                         std::to_string(solve.rcond) + ")");
    }
  }
  FaultSolution out;
  out.u_bus = solve.x.head(n);
  out.u_fault_point = solve.x(n);
  return out;
}

namespace {

void check_voltage_band(const CVector& u, const std::string& what) {
  for (int k = 0; k < u.size(); ++k) {
    double mag = std::abs(u(k));
    if (!(mag > 0.5 && mag < 1.5)) {
      throw ComputeError(what + ": bus voltage magnitude " +
                         std::to_string(mag) + " at index " +
                         std::to_string(k) + " outside (0.5, 1.5)");
    }
  }
}

}  // namespace

Dataset generate_dataset(const GridSpec& spec,
                         const GenerationConfig& config) {
  if (config.per_type < 0 || config.null_count < 0) {
    throw ValidationError("scenario counts must be nonnegative");
  }
  if (!(config.z_min > 0.0 && config.z_max >= config.z_min)) {
    throw ValidationError("fault impedance range invalid");
  }
  if (!(config.t_min > 0.0 && config.t_min < 0.5)) {
    throw ValidationError("t_min must lie in (0, 0.5)");
  }

  const int n = spec.bus_count();
  const int m = spec.line_count();
  const AdmittanceMatrix y0 = build_admittance(spec);

  Dataset dataset;
  dataset.system = n;
  dataset.line_count = m;
  dataset.config = config;

  std::int64_t next_id = 0;
  for (FaultType type : config.types) {
    for (int k = 0; k < config.per_type; ++k) {
      const int line_index = k % m;
      const Line& line = spec.line(line_index);
      const std::uint64_t sub_seed =
          derive_seed(config.master_seed, static_cast<std::uint64_t>(next_id));
      FaultScenario scenario;
      scenario.scenario_id = next_id++;
      scenario.label = line_index;
      scenario.type = type;
      scenario.seed = sub_seed;
      try {
        GridSpec perturbed =
            sample_loads(spec, config.epsilon, derive_seed(sub_seed, 1));
        PrefaultSolution pre = solve_prefault(perturbed, y0);
        check_voltage_band(pre.u, "pre-fault snapshot");

        Rng rng = make_rng(derive_seed(sub_seed, 2));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double log_z = std::log(config.z_min) +
                             unit(rng) * (std::log(config.z_max) -
                                          std::log(config.z_min));
        scenario.z_f = std::exp(log_z);
        scenario.position =
            config.t_min + unit(rng) * (1.0 - 2.0 * config.t_min);

        const Complex y_fault(fault_severity_factor(type) / scenario.z_f, 0.0);
        FaultAugmentedMatrix yf = augment_fault(
            y0, spec, line.id, scenario.position, y_fault, config.t_min);

        CVector injections = pre.injections;
        if (config.refresh_injections) {
          GridSpec redraw =
              sample_loads(spec, config.epsilon, derive_seed(sub_seed, 3));
          injections = solve_prefault(redraw, y0).injections;
        }
        FaultSolution fault = solve_duringfault(yf, injections);

        scenario.u_pre = std::move(pre.u);
        scenario.u_fault = std::move(fault.u_bus);
        scenario.u_fault_point = fault.u_fault_point;
      } catch (const std::exception& err) {
        throw ComputeError(std::string("scenario ") +
                           std::to_string(scenario.scenario_id) + " (line " +
                           std::to_string(line.id) + ", type " +
                           to_string(type) + ", seed " +
                           std::to_string(sub_seed) + "): " + err.what());
      }
      dataset.scenarios.push_back(std::move(scenario));
    }
  }

  for (int k = 0; k < config.null_count; ++k) {
    const std::uint64_t sub_seed =
        derive_seed(config.master_seed, static_cast<std::uint64_t>(next_id));
    FaultScenario scenario;
    scenario.scenario_id = next_id++;
    scenario.label = m;
    scenario.type = FaultType::None;
    scenario.seed = sub_seed;
    try {
      GridSpec first =
          sample_loads(spec, config.epsilon, derive_seed(sub_seed, 1));
      GridSpec second =
          sample_loads(spec, config.epsilon, derive_seed(sub_seed, 4));
      PrefaultSolution pre = solve_prefault(first, y0);
      PrefaultSolution post = solve_prefault(second, y0);
      check_voltage_band(pre.u, "pre-fault snapshot");
      check_voltage_band(post.u, "null-class snapshot");
      scenario.u_pre = std::move(pre.u);
      scenario.u_fault = std::move(post.u);
    } catch (const std::exception& err) {
      throw ComputeError(std::string("null scenario ") +
                         std::to_string(scenario.scenario_id) + " (seed " +
                         std::to_string(sub_seed) + "): " + err.what());
    }
    dataset.scenarios.push_back(std::move(scenario));
  }
  return dataset;
}

Dataset add_noise(const Dataset& dataset, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db)) throw ValidationError("snr_db must not be NaN");
  Dataset out = dataset;
  if (std::isinf(snr_db)) return out;
  out.noise_snr_db = snr_db;
  const double power_ratio = std::pow(10.0, -snr_db / 10.0);
  for (FaultScenario& scenario : out.scenarios) {
    Rng rng =
        make_rng(derive_seed(seed, static_cast<std::uint64_t>(
                                       scenario.scenario_id), 0x6e6f697365ULL));
    std::normal_distribution<double> unit(0.0, 1.0);
    auto corrupt = [&](CVector& u) {
      const double signal_power = u.squaredNorm() / u.size();
      const double sigma = std::sqrt(signal_power * power_ratio / 2.0);
      for (int k = 0; k < u.size(); ++k) {
        u(k) += Complex(sigma * unit(rng), sigma * unit(rng));
      }
    };
    corrupt(scenario.u_pre);
    corrupt(scenario.u_fault);
  }
  return out;
}

Dataset apply_delay(const Dataset& dataset, double mean_ms, double sigma_ms,
                    double fraction, std::uint64_t seed, double window_s) {
  if (mean_ms < 0.0 || sigma_ms < 0.0) {
    throw ValidationError("delay mean and sigma must be nonnegative");
  }
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ValidationError("delay fraction must lie in [0, 1]");
  }
  if (!(window_s > 0.0)) {
    throw ValidationError("fault window must be positive");
  }
  Dataset out = dataset;
  DelayConfig applied{mean_ms, sigma_ms, fraction, window_s, seed};
  out.delay = applied;
  const double window_ms = window_s * 1000.0;
  for (FaultScenario& scenario : out.scenarios) {
    const int n = static_cast<int>(scenario.u_pre.size());
    const int delayed = static_cast<int>(std::ceil(fraction * n));
    if (delayed == 0) continue;
    Rng rng =
        make_rng(derive_seed(seed, static_cast<std::uint64_t>(
                                       scenario.scenario_id), 0x64656c6179ULL));
    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k;
    for (int k = 0; k < delayed; ++k) {  // partial Fisher-Yates
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(order[k], order[pick(rng)]);
    }
    std::normal_distribution<double> delay_ms(mean_ms, sigma_ms);
    for (int k = 0; k < delayed; ++k) {
      const int bus = order[k];
      const double d = sigma_ms == 0.0 ? mean_ms : std::max(0.0, delay_ms(rng));
      const double w = std::clamp(1.0 - d / window_ms, 0.0, 1.0);
      scenario.u_fault(bus) =
          (1.0 - w) * scenario.u_pre(bus) + w * scenario.u_fault(bus);
    }
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write dataset " + path.string());
  const int n = dataset.system;
  std::string header = "scenario_id,system,label,fault_type,z_f,t,seed";
  for (int k = 1; k <= n; ++k) {
    header += ",u0_re_" + std::to_string(k) + ",u0_im_" + std::to_string(k);
  }
  for (int k = 1; k <= n; ++k) {
    header += ",uf_re_" + std::to_string(k) + ",uf_im_" + std::to_string(k);
  }
  out << header << "\n";
  for (const FaultScenario& s : dataset.scenarios) {
    std::string row;
    row += std::to_string(s.scenario_id);
    row += ',';
    row += std::to_string(dataset.system);
    row += ',';
    row += std::to_string(s.label);
    row += ',';
    row += to_string(s.type);
    row += ',';
    append_double(row, s.z_f);
    row += ',';
    append_double(row, s.position);
    row += ',';
    row += std::to_string(s.seed);
    for (int k = 0; k < n; ++k) {
      row += ',';
      append_double(row, s.u_pre(k).real());
      row += ',';
      append_double(row, s.u_pre(k).imag());
    }
    for (int k = 0; k < n; ++k) {
      row += ',';
      append_double(row, s.u_fault(k).real());
      row += ',';
      append_double(row, s.u_fault(k).imag());
    }
    out << row << "\n";
  }

  Json sidecar;
  sidecar["system"] = dataset.system;
  sidecar["line_count"] = dataset.line_count;
  Json gen;
  gen["per_type"] = dataset.config.per_type;
  Json types = Json::array();
  for (FaultType t : dataset.config.types) types.push_back(to_string(t));
  gen["types"] = types;
  gen["null_count"] = dataset.config.null_count;
  gen["z_min"] = dataset.config.z_min;
  gen["z_max"] = dataset.config.z_max;
  gen["t_min"] = dataset.config.t_min;
  gen["epsilon"] = dataset.config.epsilon;
  gen["refresh_injections"] = dataset.config.refresh_injections;
  gen["master_seed"] = dataset.config.master_seed;
  sidecar["generation"] = gen;
  sidecar["noise_snr_db"] = std::isinf(dataset.noise_snr_db)
                                ? Json("inf")
                                : Json(dataset.noise_snr_db);
  if (dataset.delay) {
    Json delay;
    delay["mean_ms"] = dataset.delay->mean_ms;
    delay["sigma_ms"] = dataset.delay->sigma_ms;
    delay["fraction"] = dataset.delay->fraction;
    delay["window_s"] = dataset.delay->window_s;
    delay["seed"] = dataset.delay->seed;
    sidecar["delay"] = delay;
  }
  std::ofstream side(path.string() + ".json", std::ios::binary);
  side << sidecar.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  Dataset dataset;
  std::string row;
  int line_no = 0;
  int n = -1;
  while (std::getline(in, row)) {
    ++line_no;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    if (line_no == 1) continue;  // header
    std::vector<std::string_view> fields;
    std::string_view view = row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = view.find(',', start);
      if (comma == std::string_view::npos) {
        fields.push_back(view.substr(start));
        break;
      }
      fields.push_back(view.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() < 7 || (fields.size() - 7) % 4 != 0) {
      throw ValidationError("dataset line " + std::to_string(line_no) +
                            ": wrong field count");
    }
    const int row_n = static_cast<int>((fields.size() - 7) / 4);
    if (n < 0) n = row_n;
    if (row_n != n) {
      throw ValidationError("dataset line " + std::to_string(line_no) +
                            ": inconsistent bus count");
    }
    FaultScenario s;
    s.scenario_id = static_cast<std::int64_t>(parse_field(fields[0], line_no));
    dataset.system = static_cast<int>(parse_field(fields[1], line_no));
    s.label = static_cast<int>(parse_field(fields[2], line_no));
    s.type = fault_type_from_string(std::string(fields[3]));
    s.z_f = parse_field(fields[4], line_no);
    s.position = parse_field(fields[5], line_no);
    s.seed = static_cast<std::uint64_t>(parse_field(fields[6], line_no));
    s.u_pre.resize(n);
    s.u_fault.resize(n);
    for (int k = 0; k < n; ++k) {
      s.u_pre(k) = Complex(parse_field(fields[7 + 2 * k], line_no),
                           parse_field(fields[8 + 2 * k], line_no));
    }
    const int base = 7 + 2 * n;
    for (int k = 0; k < n; ++k) {
      s.u_fault(k) = Complex(parse_field(fields[base + 2 * k], line_no),
                             parse_field(fields[base + 1 + 2 * k], line_no));
    }
    dataset.scenarios.push_back(std::move(s));
  }
  if (dataset.system == 0 && n > 0) dataset.system = n;

  const std::filesystem::path sidecar_path(path.string() + ".json");
  if (std::filesystem::exists(sidecar_path)) {
    std::ifstream side(sidecar_path);
    Json sidecar = Json::parse(side);
    if (dataset.system == 0) dataset.system = sidecar.value("system", 0);
    dataset.line_count = sidecar.value("line_count", 0);
    if (sidecar.contains("generation")) {
      const Json& gen = sidecar["generation"];
      dataset.config.per_type = gen.value("per_type", 0);
      dataset.config.null_count = gen.value("null_count", 0);
      dataset.config.z_min = gen.value("z_min", 1e-4);
      dataset.config.z_max = gen.value("z_max", 0.1);
      dataset.config.t_min = gen.value("t_min", kDefaultTMin);
      dataset.config.epsilon = gen.value("epsilon", 0.01);
      dataset.config.refresh_injections =
          gen.value("refresh_injections", false);
      dataset.config.master_seed = gen.value("master_seed", 0ULL);
      if (gen.contains("types")) {
        dataset.config.types.clear();
        for (const auto& t : gen["types"]) {
          dataset.config.types.push_back(
              fault_type_from_string(t.get<std::string>()));
        }
      }
    }
    if (sidecar.contains("noise_snr_db") && sidecar["noise_snr_db"].is_number()) {
      dataset.noise_snr_db = sidecar["noise_snr_db"].get<double>();
    }
    if (sidecar.contains("delay")) {
      const Json& d = sidecar["delay"];
      DelayConfig delay;
      delay.mean_ms = d.value("mean_ms", 0.0);
      delay.sigma_ms = d.value("sigma_ms", 0.0);
      delay.fraction = d.value("fraction", 0.0);
      delay.window_s = d.value("window_s", 0.2);
      delay.seed = d.value("seed", 0ULL);
      dataset.delay = delay;
    }
  } else if (!dataset.scenarios.empty()) {
    int max_label = 0;
    for (const auto& s : dataset.scenarios) {
      max_label = std::max(max_label, s.label);
    }
    dataset.line_count = max_label;  // best effort without the sidecar
  }
  return dataset;
}

}  // namespace gridfault
