#include "gridfault/placement.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <thread>

#include "gridfault/rng.hpp"
#include "nlohmann/json.hpp"

namespace gridfault {

namespace {

using Json = nlohmann::ordered_json;

std::vector<int> bus_distances(const GridSpec& spec, int start_index) {
  std::vector<int> dist(spec.bus_count(), -1);
  std::queue<int> queue;
  dist[start_index] = 0;
  queue.push(start_index);
  while (!queue.empty()) {
    int at = queue.front();
    queue.pop();
    for (int nb : spec.neighbors(at)) {
      if (dist[nb] < 0) {
        dist[nb] = dist[at] + 1;
        queue.push(nb);
      }
    }
  }
  return dist;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= count) return;
      fn(k);
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

}  // namespace

std::vector<int> default_initial_set(const GridSpec& spec, int count) {
  std::vector<int> order(spec.bus_count());
  for (int k = 0; k < spec.bus_count(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (spec.degree(a) != spec.degree(b)) {
      return spec.degree(a) > spec.degree(b);
    }
    return spec.bus(a).id < spec.bus(b).id;
  });
  std::vector<int> ids;
  for (int k = 0; k < std::min<int>(count, spec.bus_count()); ++k) {
    ids.push_back(spec.bus(order[k]).id);
  }
  return ids;
}

int pick_best_candidate(const std::vector<PlacementCandidate>& candidates) {
  int best = -1;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (candidates[k].failed) continue;
    if (best < 0 || candidates[k].combined < candidates[best].combined ||
        (candidates[k].combined == candidates[best].combined &&
         candidates[k].bus < candidates[best].bus)) {
      best = static_cast<int>(k);
    }
  }
  return best;
}

PlacementSet greedy_placement(const GridSpec& spec, const Dataset& train_data,
                              const Dataset& val_data,
                              const ArchitectureSpec& arch, int target_size,
                              double beta, std::vector<int> initial,
                              const TrainConfig& budget, int threads,
                              bool standardize) {
  if (target_size > spec.bus_count()) {
    throw ValidationError("target size exceeds bus count");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ValidationError("beta must lie in (0, 1)");
  }
  if (static_cast<int>(initial.size()) > target_size) {
    throw ValidationError("initial set larger than target size");
  }
  std::set<int> selected;
  for (int id : initial) {
    spec.bus_index(id);  // throws on unknown id
    if (!selected.insert(id).second) {
      throw ValidationError("duplicate bus in initial set");
    }
  }

  PlacementSet out;
  out.algorithm = "greedy";
  out.target_size = target_size;
  out.beta = beta;
  out.seed = budget.seed;
  out.initial = initial;
  out.buses = initial;

  double incumbent = std::numeric_limits<double>::infinity();
  int step = 0;
  while (static_cast<int>(out.buses.size()) < target_size) {
    ++step;
    std::vector<int> pool;
    for (int k = 0; k < spec.bus_count(); ++k) {
      const int id = spec.bus(k).id;
      if (!selected.count(id)) pool.push_back(id);
    }
    std::vector<PlacementCandidate> candidates(pool.size());
    parallel_for(
        static_cast<int>(pool.size()), threads, [&](int k) {
          const int bus_id = pool[k];
          PlacementCandidate& cand = candidates[k];
          cand.bus = bus_id;
          cand.degree_term = beta / spec.degree(spec.bus_index(bus_id));
          std::vector<int> with(out.buses);
          with.push_back(bus_id);
          std::sort(with.begin(), with.end());
          // The budget seed is shared by every candidate run, so loss
          // comparisons are paired: identical init and batch order, only the
          // observed features differ.
          TrainConfig run = budget;
          try {
            LabeledSet train_set = extract_features(train_data, spec, with);
            LabeledSet val_set = extract_features(val_data, spec, with);
            if (standardize) {
              const FeatureScaler scaler = FeatureScaler::fit(train_set);
              scaler.apply(train_set);
              scaler.apply(val_set);
            }
            TrainResult result = train(arch, train_set, val_set, run);
            cand.loss = result.best_val_loss;
            cand.combined = cand.degree_term + cand.loss;
          } catch (const std::exception&) {
            cand.failed = true;
            cand.loss = std::numeric_limits<double>::infinity();
            cand.combined = std::numeric_limits<double>::infinity();
          }
        });

    PlacementStep log_entry;
    log_entry.step = step;
    log_entry.candidates = candidates;

    // Best-scoring candidate that passes the improvement guard; candidates
    // rejected by the guard fall through to the next-best score. The run
    // stops early once no remaining candidate improves the incumbent.
    std::vector<PlacementCandidate> passing;
    for (const PlacementCandidate& cand : candidates) {
      if (!cand.failed && cand.loss < incumbent) passing.push_back(cand);
    }
    const int best = pick_best_candidate(passing);
    log_entry.accepted = best >= 0;
    log_entry.chosen_bus = best >= 0 ? passing[best].bus : -1;
    if (best >= 0) {
      incumbent = passing[best].loss;
      out.buses.push_back(passing[best].bus);
      selected.insert(passing[best].bus);
    }
    log_entry.incumbent_loss = incumbent;
    out.log.push_back(std::move(log_entry));
    if (best < 0) {
      out.reached_target = false;
      break;
    }
  }
  out.reached_target = static_cast<int>(out.buses.size()) == target_size;
  return out;
}

PlacementSet random_placement(int bus_count, int target_size,
                              std::uint64_t seed) {
  if (target_size > bus_count || target_size < 0) {
    throw ValidationError("target size must lie in [0, bus count]");
  }
  std::vector<int> ids(bus_count);
  for (int k = 0; k < bus_count; ++k) ids[k] = k + 1;
  Rng rng = make_rng(derive_seed(seed, 0x72616e64ULL));
  for (int k = 0; k < target_size; ++k) {
    std::uniform_int_distribution<int> pick(k, bus_count - 1);
    std::swap(ids[k], ids[pick(rng)]);
  }
  PlacementSet out;
  out.algorithm = "random";
  out.target_size = target_size;
  out.seed = seed;
  out.buses.assign(ids.begin(), ids.begin() + target_size);
  return out;
}

PlacementSet two_hop_vc(const GridSpec& spec) {
  const int n = spec.bus_count();
  const int m = spec.line_count();

  // covers[b]: lines with an endpoint within one hop of b.
  std::vector<std::vector<int>> covers(n);
  for (int b = 0; b < n; ++b) {
    std::vector<char> near(n, 0);
    near[b] = 1;
    for (int nb : spec.neighbors(b)) near[nb] = 1;
    for (int l = 0; l < m; ++l) {
      const Line& line = spec.line(l);
      if (near[spec.bus_index(line.from)] || near[spec.bus_index(line.to)]) {
        covers[b].push_back(l);
      }
    }
  }

  std::vector<char> covered(m, 0);
  int remaining = m;
  PlacementSet out;
  out.algorithm = "two_hop_vc";
  while (remaining > 0) {
    int best_bus = -1;
    int best_gain = -1;
    for (int b = 0; b < n; ++b) {
      int gain = 0;
      for (int l : covers[b]) {
        if (!covered[l]) ++gain;
      }
      if (gain > best_gain ||
          (gain == best_gain && best_bus >= 0 &&
           spec.bus(b).id < spec.bus(best_bus).id)) {
        best_gain = gain;
        best_bus = b;
      }
    }
    if (best_gain <= 0) {
      throw ComputeError("set cover stalled with lines uncovered");
    }
    for (int l : covers[best_bus]) {
      if (!covered[l]) {
        covered[l] = 1;
        --remaining;
      }
    }
    out.buses.push_back(spec.bus(best_bus).id);
  }
  out.target_size = static_cast<int>(out.buses.size());
  if (!satisfies_two_hop(spec, out.buses)) {
    throw ComputeError("cover does not satisfy the two-hop property");
  }
  return out;
}

bool satisfies_two_hop(const GridSpec& spec, const std::vector<int>& bus_ids) {
  if (bus_ids.empty()) return spec.line_count() == 0;
  std::vector<int> best(spec.bus_count(), std::numeric_limits<int>::max());
  for (int id : bus_ids) {
    const auto dist = bus_distances(spec, spec.bus_index(id));
    for (int k = 0; k < spec.bus_count(); ++k) {
      if (dist[k] >= 0) best[k] = std::min(best[k], dist[k]);
    }
  }
  for (int l = 0; l < spec.line_count(); ++l) {
    const Line& line = spec.line(l);
    const int hops = std::min(best[spec.bus_index(line.from)],
                              best[spec.bus_index(line.to)]);
    if (hops > 2) return false;
  }
  return true;
}

void save_placement(const PlacementSet& placement,
                    const std::filesystem::path& path) {
  Json doc;
  doc["algorithm"] = placement.algorithm;
  doc["target_size"] = placement.target_size;
  doc["beta"] = placement.beta;
  doc["seed"] = placement.seed;
  doc["initial"] = placement.initial;
  doc["buses"] = placement.buses;
  doc["reached_target"] = placement.reached_target;
  Json steps = Json::array();
  for (const PlacementStep& step : placement.log) {
    Json entry;
    entry["step"] = step.step;
    entry["chosen_bus"] = step.chosen_bus;
    entry["accepted"] = step.accepted;
    entry["incumbent_loss"] = step.incumbent_loss;
    Json cands = Json::array();
    for (const PlacementCandidate& c : step.candidates) {
      Json cand;
      cand["bus"] = c.bus;
      cand["loss"] = c.loss;
      cand["degree_term"] = c.degree_term;
      cand["combined"] = c.combined;
      cand["failed"] = c.failed;
      cands.push_back(cand);
    }
    entry["candidates"] = cands;
    steps.push_back(entry);
  }
  doc["steps"] = steps;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write placement " + path.string());
  out << doc.dump(2) << "\n";
}

PlacementSet load_placement(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open placement " + path.string());
  Json doc = Json::parse(in);
  PlacementSet out;
  out.algorithm = doc.value("algorithm", "");
  out.target_size = doc.value("target_size", 0);
  out.beta = doc.value("beta", 0.0);
  out.seed = doc.value("seed", 0ULL);
  out.reached_target = doc.value("reached_target", true);
  if (doc.contains("initial")) {
    out.initial = doc["initial"].get<std::vector<int>>();
  }
  if (doc.contains("buses")) {
    out.buses = doc["buses"].get<std::vector<int>>();
  }
  return out;
}

}  // namespace gridfault
