#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gridfault/grid.hpp"

namespace gridfault {

enum class FaultType { TP, LG, DLG, LL, None };

const char* to_string(FaultType type);
FaultType fault_type_from_string(const std::string& name);

/// Positive-sequence severity factor: the effective fault shunt is
/// factor / Z_f. Ordering TP > DLG > LL > LG.
double fault_severity_factor(FaultType type);

struct FaultScenario {
  std::int64_t scenario_id = 0;
  int label = 0;  // line index in [0, m); m is the null class
  FaultType type = FaultType::None;
  double z_f = 0.0;
  double position = 0.0;
  std::uint64_t seed = 0;
  CVector u_pre;    // U0, pre-fault bus voltages
  CVector u_fault;  // U', during-fault bus voltages
  std::optional<Complex> u_fault_point;
};

struct GenerationConfig {
  int per_type = 0;  // faulted scenarios per type, lines visited round-robin
  std::vector<FaultType> types{FaultType::TP, FaultType::LG, FaultType::DLG,
                               FaultType::LL};
  int null_count = 0;
  double z_min = 1e-4;  // fault impedance, log-uniform
  double z_max = 0.1;
  double t_min = kDefaultTMin;
  double epsilon = 0.01;  // load variance; sqrt(epsilon) is the p.u. sigma
  bool refresh_injections = false;  // redraw during-fault injections
  std::uint64_t master_seed = 0;
};

struct DelayConfig {
  double mean_ms = 0.0;
  double sigma_ms = 0.0;
  double fraction = 0.0;
  double window_s = 0.2;  // fault-clearing window T_f
  std::uint64_t seed = 0;
};

struct Dataset {
  int system = 0;      // bus count tag
  int line_count = 0;  // m; labels lie in [0, m]
  GenerationConfig config;
  double noise_snr_db = std::numeric_limits<double>::infinity();
  std::optional<DelayConfig> delay;
  std::vector<FaultScenario> scenarios;
};

/// Copy of `spec` with every bus load perturbed by independent N(0, epsilon)
/// noise on both the active and reactive part.
GridSpec sample_loads(const GridSpec& spec, double epsilon,
                      std::uint64_t seed);

struct PrefaultSolution {
  CVector u;           // U0
  CVector injections;  // realized I0 = Y0 U0
};

/// Constant-current-injection snapshot: I_k = conj(S_k) for net injected
/// power S_k, reference bus pinned to 1 angle 0 by row replacement.
PrefaultSolution solve_prefault(const GridSpec& spec);
PrefaultSolution solve_prefault(const GridSpec& spec,
                                const AdmittanceMatrix& y0);

struct FaultSolution {
  CVector u_bus;  // U'
  Complex u_fault_point{0.0, 0.0};
};

/// Solve the (n+1)-node system with injections [I0; 0]. The raw system is
/// used when well conditioned so the bus injections stay exactly I0; a
/// reference-pinned solve is the fallback for singular zero-shunt networks.
FaultSolution solve_duringfault(const FaultAugmentedMatrix& yf,
                                const CVector& injections,
                                int reference_index = 0,
                                Complex reference_voltage = {1.0, 0.0});

Dataset generate_dataset(const GridSpec& spec, const GenerationConfig& config);

/// Circular complex Gaussian measurement noise at the given SNR, applied to
/// U0 and U' independently. An infinite snr_db leaves the dataset unchanged.
Dataset add_noise(const Dataset& dataset, double snr_db, std::uint64_t seed);

/// Reporting-delay corruption: ceil(fraction*n) buses per scenario report the
/// mixture (1-w) U0 + w U' with w = clamp(1 - d/T_f, 0, 1), d ~ N(mu, sigma).
Dataset apply_delay(const Dataset& dataset, double mean_ms, double sigma_ms,
                    double fraction, std::uint64_t seed,
                    double window_s = 0.2);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace gridfault
