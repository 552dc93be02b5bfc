#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridfault/cnn.hpp"
#include "gridfault/faultgen.hpp"

namespace gridfault {

struct PlacementCandidate {
  int bus = 0;  // bus id
  double loss = 0.0;
  double degree_term = 0.0;  // beta / degree
  double combined = 0.0;
  bool failed = false;
};

struct PlacementStep {
  int step = 0;
  std::vector<PlacementCandidate> candidates;
  int chosen_bus = 0;
  bool accepted = false;
  double incumbent_loss = 0.0;  // after the step
};

struct PlacementSet {
  std::string algorithm;
  std::vector<int> buses;  // bus ids, selection order
  int target_size = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> initial;
  std::vector<PlacementStep> log;
  bool reached_target = true;
};

/// The `count` highest-degree buses, ties broken by lower bus id.
std::vector<int> default_initial_set(const GridSpec& spec, int count = 2);

/// Candidate with the smallest degree-term-plus-loss score; ties go to the
/// lower bus id. Failed candidates are ignored; returns -1 if none remain.
int pick_best_candidate(const std::vector<PlacementCandidate>& candidates);

/// Loss-driven greedy growth of the measured set: every step trains a
/// classifier per candidate bus under the reduced budget, scores it with
/// beta/degree + loss, and keeps the winner while the incumbent loss
/// improves. Stops early (reported) once the guard rejects.
PlacementSet greedy_placement(const GridSpec& spec, const Dataset& train_data,
                              const Dataset& val_data,
                              const ArchitectureSpec& arch, int target_size,
                              double beta, std::vector<int> initial,
                              const TrainConfig& budget, int threads = 1,
                              bool standardize = false);

PlacementSet random_placement(int bus_count, int target_size,
                              std::uint64_t seed);

/// Greedy set cover of the lines: a bus covers every line with an endpoint
/// within one hop, most-covering bus first, ties by lower id.
PlacementSet two_hop_vc(const GridSpec& spec);

/// Every line has an endpoint within two hops of some selected bus.
bool satisfies_two_hop(const GridSpec& spec, const std::vector<int>& bus_ids);

void save_placement(const PlacementSet& placement,
                    const std::filesystem::path& path);
PlacementSet load_placement(const std::filesystem::path& path);

}  // namespace gridfault
