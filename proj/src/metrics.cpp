#include "gridfault/metrics.hpp"

#include <algorithm>
#include <queue>

#include "gridfault/errors.hpp"

namespace gridfault {

double lar(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.empty() || predicted.size() != labels.size()) {
    throw ValidationError("lar needs nonempty matching prediction and label "
                          "sequences");
  }
  int hits = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (predicted[k] == labels[k]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double arc(const std::vector<std::vector<int>>& rankings,
           const std::vector<int>& labels) {
  if (rankings.empty() || rankings.size() != labels.size()) {
    throw ValidationError("arc needs nonempty matching rankings and labels");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    auto at = std::find(rankings[k].begin(), rankings[k].end(), labels[k]);
    if (at == rankings[k].end()) {
      throw ValidationError("label " + std::to_string(labels[k]) +
                            " missing from ranking " + std::to_string(k));
    }
    total += static_cast<double>(at - rankings[k].begin()) + 1.0;
  }
  return total / static_cast<double>(labels.size());
}

namespace {

// Line adjacency: two lines are neighbors iff they share a bus.
std::vector<std::vector<int>> line_graph(const GridSpec& spec) {
  const int m = spec.line_count();
  std::vector<std::vector<int>> by_bus(spec.bus_count());
  for (int l = 0; l < m; ++l) {
    by_bus[spec.bus_index(spec.line(l).from)].push_back(l);
    by_bus[spec.bus_index(spec.line(l).to)].push_back(l);
  }
  std::vector<std::vector<int>> adj(m);
  for (const auto& incident : by_bus) {
    for (int a : incident) {
      for (int b : incident) {
        if (a != b) adj[a].push_back(b);
      }
    }
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

int line_hops(const std::vector<std::vector<int>>& adj, int from, int to,
              int cap) {
  if (from == to) return 0;
  std::vector<int> dist(adj.size(), -1);
  std::queue<int> queue;
  dist[from] = 0;
  queue.push(from);
  while (!queue.empty()) {
    int at = queue.front();
    queue.pop();
    if (dist[at] >= cap) continue;
    for (int nb : adj[at]) {
      if (dist[nb] < 0) {
        dist[nb] = dist[at] + 1;
        if (nb == to) return dist[nb];
        queue.push(nb);
      }
    }
  }
  return cap + 1;
}

}  // namespace

HopTable hop_analysis(const std::vector<int>& predicted,
                      const std::vector<int>& labels, const GridSpec& spec) {
  if (predicted.empty() || predicted.size() != labels.size()) {
    throw ValidationError("hop analysis needs matching sequences");
  }
  const int m = spec.line_count();
  const auto adj = line_graph(spec);
  int exact = 0, one = 0, two = 0, total = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == m) continue;  // true null class: reported separately
    if (labels[k] < 0 || labels[k] > m || predicted[k] < 0 ||
        predicted[k] > m) {
      throw ValidationError("class index outside [0, m]");
    }
    ++total;
    if (predicted[k] == m) continue;  // null prediction: beyond two hops
    const int hops = line_hops(adj, labels[k], predicted[k], 2);
    if (hops == 0) ++exact;
    if (hops <= 1) ++one;
    if (hops <= 2) ++two;
  }
  HopTable table;
  table.evaluated = total;
  if (total > 0) {
    table.exact = static_cast<double>(exact) / total;
    table.within_one = static_cast<double>(one) / total;
    table.within_two = static_cast<double>(two) / total;
  }
  return table;
}

double uncertainty_index(const std::vector<CVector>& test_u_pre,
                         const CVector& train_mean_u_pre) {
  if (test_u_pre.empty()) throw ValidationError("empty test set");
  const double mean_norm = train_mean_u_pre.norm();
  if (!(mean_norm > 0.0)) {
    throw ValidationError("training mean voltage has zero norm");
  }
  const auto n = train_mean_u_pre.size();
  double sum = 0.0;
  for (const CVector& u : test_u_pre) {
    if (u.size() != n) throw ValidationError("voltage dimension mismatch");
    sum += (u - train_mean_u_pre).norm() / mean_norm;
  }
  return sum / (static_cast<double>(n) *
                static_cast<double>(test_u_pre.size()));
}

}  // namespace gridfault
