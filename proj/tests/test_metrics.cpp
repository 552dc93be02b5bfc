#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "gridfault/metrics.hpp"
#include "test_support.hpp"

using namespace gridfault;

namespace {

// Brute-force rank of `label` built by selection sort over the probabilities,
// ties resolved toward the lower class index.
int rank_by_selection(const std::vector<double>& probs, int label) {
  std::vector<int> order;
  std::vector<char> used(probs.size(), 0);
  for (std::size_t round = 0; round < probs.size(); ++round) {
    int best = -1;
    for (std::size_t c = 0; c < probs.size(); ++c) {
      if (used[c]) continue;
      if (best < 0 || probs[c] > probs[best]) best = static_cast<int>(c);
    }
    used[best] = 1;
    order.push_back(best);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k] == label) return static_cast<int>(k) + 1;
  }
  return -1;
}

// All-pairs line-graph distances by Floyd-Warshall; lines are adjacent when
// they share a bus.
std::vector<std::vector<int>> line_distances(const GridSpec& spec) {
  const int m = spec.line_count();
  const int inf = 1000000;
  std::vector<std::vector<int>> dist(m, std::vector<int>(m, inf));
  for (int a = 0; a < m; ++a) dist[a][a] = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      const Line& la = spec.line(a);
      const Line& lb = spec.line(b);
      if (la.from == lb.from || la.from == lb.to || la.to == lb.from ||
          la.to == lb.to) {
        dist[a][b] = 1;
      }
    }
  }
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
      }
    }
  }
  return dist;
}

}  // namespace

TEST_CASE("lar counts exact hits") {
  CHECK(lar({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(lar({0, 0, 0}, {1, 2, 3}) == 0.0);
  const std::vector<int> predicted{4, 1, 2, 9, 4, 5, 6, 0, 8, 9};
  const std::vector<int> labels{4, 1, 2, 3, 4, 5, 6, 7, 8, 0};
  CHECK(lar(predicted, labels) == doctest::Approx(0.7));
  CHECK_THROWS_AS(lar({}, {}), ValidationError);
  CHECK_THROWS_AS(lar({1}, {1, 2}), ValidationError);
}

TEST_CASE("arc of perfect and second-place rankings") {
  std::vector<std::vector<int>> rankings{{2, 0, 1}, {1, 2, 0}, {0, 1, 2}};
  CHECK(arc(rankings, {2, 1, 0}) == 1.0);
  CHECK(arc(rankings, {0, 2, 1}) == 2.0);
  CHECK_THROWS_AS(arc({{0, 1}}, {5}), ValidationError);
}

TEST_CASE("arc agrees with a brute-force sort-and-find oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int round = 0; round < 50; ++round) {
    std::uniform_int_distribution<int> classes_pick(3, 12);
    const int classes = classes_pick(rng);
    std::uniform_int_distribution<int> cases_pick(1, 20);
    const int cases = cases_pick(rng);
    std::vector<std::vector<int>> rankings;
    std::vector<int> labels;
    double oracle_total = 0.0;
    for (int c = 0; c < cases; ++c) {
      std::vector<double> probs(classes);
      for (double& p : probs) p = unit(rng);
      std::vector<int> ranking(classes);
      std::iota(ranking.begin(), ranking.end(), 0);
      std::stable_sort(ranking.begin(), ranking.end(),
                       [&](int a, int b) { return probs[a] > probs[b]; });
      std::uniform_int_distribution<int> label_pick(0, classes - 1);
      const int label = label_pick(rng);
      rankings.push_back(ranking);
      labels.push_back(label);
      oracle_total += rank_by_selection(probs, label);
    }
    CHECK(arc(rankings, labels) == oracle_total / cases);
  }
}

TEST_CASE("hop analysis on hand-built path-graph fixtures") {
  // Path 1-2-3-4-5: line k joins buses k+1 and k+2, so consecutive lines
  // share a bus.
  const GridSpec spec = parse_case_text(gftest::path_case(5));
  SUBCASE("all exact") {
    const HopTable t = hop_analysis({0, 1, 2, 3}, {0, 1, 2, 3}, spec);
    CHECK(t.exact == 1.0);
    CHECK(t.within_one == 1.0);
    CHECK(t.within_two == 1.0);
  }
  SUBCASE("every miss lands on an adjacent line") {
    const HopTable t = hop_analysis({1, 0, 3, 2}, {0, 1, 2, 3}, spec);
    CHECK(t.exact == 0.0);
    CHECK(t.within_one == 1.0);
    CHECK(t.within_two == 1.0);
  }
  SUBCASE("null predictions count beyond two hops") {
    const HopTable t = hop_analysis({4, 4, 2, 3}, {0, 1, 2, 3}, spec);
    CHECK(t.exact == 0.5);
    CHECK(t.within_two == 0.5);
  }
  SUBCASE("true null cases are excluded") {
    const HopTable t = hop_analysis({0, 1, 0}, {0, 1, 4}, spec);
    CHECK(t.evaluated == 2);
    CHECK(t.exact == 1.0);
  }
  SUBCASE("two hops apart") {
    const HopTable t = hop_analysis({2}, {0}, spec);
    CHECK(t.exact == 0.0);
    CHECK(t.within_one == 0.0);
    CHECK(t.within_two == 1.0);
  }
}

TEST_CASE("hop analysis matches a Floyd-Warshall oracle") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 50; ++round) {
    const GridSpec spec = gftest::random_grid(7, rng);
    const auto dist = line_distances(spec);
    const int m = spec.line_count();
    std::uniform_int_distribution<int> line_pick(0, m - 1);
    std::uniform_int_distribution<int> pred_pick(0, m);  // may predict null
    std::vector<int> labels, predicted;
    for (int c = 0; c < 25; ++c) {
      labels.push_back(line_pick(rng));
      predicted.push_back(pred_pick(rng));
    }
    int exact = 0, one = 0, two = 0;
    for (int c = 0; c < 25; ++c) {
      if (predicted[c] == m) continue;
      const int d = dist[labels[c]][predicted[c]];
      exact += d == 0;
      one += d <= 1;
      two += d <= 2;
    }
    const HopTable t = hop_analysis(predicted, labels, spec);
    CHECK(t.evaluated == 25);
    CHECK(t.exact == doctest::Approx(exact / 25.0));
    CHECK(t.within_one == doctest::Approx(one / 25.0));
    CHECK(t.within_two == doctest::Approx(two / 25.0));
    CHECK(t.exact <= t.within_one);
    CHECK(t.within_one <= t.within_two);
    CHECK(t.within_two <= 1.0);
  }
}

TEST_CASE("uncertainty index formula") {
  CVector mean(4);
  mean << Complex(1, 0), Complex(1, 0.1), Complex(0.9, 0), Complex(1, -0.1);
  SUBCASE("identical test set gives zero") {
    CHECK(uncertainty_index({mean, mean, mean}, mean) == 0.0);
  }
  SUBCASE("doubled vector gives 1/n") {
    const CVector doubled = 2.0 * mean;
    CHECK(uncertainty_index({doubled}, mean) == doctest::Approx(0.25));
  }
  SUBCASE("averages over sets and divides by the bus count") {
    std::vector<CVector> tests{1.5 * mean, 0.5 * mean};
    // Each term contributes 0.5; averaged over 2 sets and n = 4.
    CHECK(uncertainty_index(tests, mean) == doctest::Approx(0.5 / 4.0));
  }
  SUBCASE("zero mean rejected") {
    CHECK_THROWS_AS(uncertainty_index({mean}, CVector::Zero(4)),
                    ValidationError);
  }
  SUBCASE("empty test set rejected") {
    CHECK_THROWS_AS(uncertainty_index({}, mean), ValidationError);
  }
}
