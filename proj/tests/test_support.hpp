#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here is deliberately written from first principles rather than through the
// library's own code paths.

#include <complex>
#include <random>
#include <string>
#include <vector>

#include "gridfault/grid.hpp"

namespace gftest {

inline std::filesystem::path data_dir() {
  return std::filesystem::path(GRIDFAULT_DATA_DIR);
}

inline std::string two_bus_case(double r = 0.04, double x = 0.2,
                                double b = 0.0) {
  std::string text = "#buses id,shunt_re,shunt_im,p_load,q_load\n";
  text += "1,0,0,0,0\n";
  text += "2,0,0,0.5,0.2\n";
  text += "#lines id,from,to,r,x,b\n";
  text += "1,1,2," + std::to_string(r) + "," + std::to_string(x) + "," +
          std::to_string(b) + "\n";
  return text;
}

inline std::string path_case(int n) {
  std::string text = "#buses id,shunt_re,shunt_im,p_load,q_load\n";
  for (int k = 1; k <= n; ++k) {
    text += std::to_string(k) + ",0,0,0.1,0.05\n";
  }
  text += "#lines id,from,to,r,x,b\n";
  for (int k = 1; k < n; ++k) {
    text += std::to_string(k) + "," + std::to_string(k) + "," +
            std::to_string(k + 1) + ",0.01,0.1,0\n";
  }
  return text;
}

inline std::string star_case(int leaves) {
  std::string text = "#buses id,shunt_re,shunt_im,p_load,q_load\n";
  text += "1,0,0,0,0\n";
  for (int k = 2; k <= leaves + 1; ++k) {
    text += std::to_string(k) + ",0,0,0.1,0.02\n";
  }
  text += "#lines id,from,to,r,x,b\n";
  for (int k = 2; k <= leaves + 1; ++k) {
    text += std::to_string(k - 1) + ",1," + std::to_string(k) +
            ",0.01,0.1,0\n";
  }
  return text;
}

inline std::string cycle_case(int n) {
  std::string text = "#buses id,shunt_re,shunt_im,p_load,q_load\n";
  for (int k = 1; k <= n; ++k) {
    text += std::to_string(k) + ",0,0,0.1,0.02\n";
  }
  text += "#lines id,from,to,r,x,b\n";
  for (int k = 1; k <= n; ++k) {
    text += std::to_string(k) + "," + std::to_string(k) + "," +
            std::to_string(k % n + 1) + ",0.01,0.1,0\n";
  }
  return text;
}

// Straightforward independent rebuild of the admittance matrix, summing
// branch stamps one by one.
inline gridfault::CMatrix naive_admittance(const gridfault::GridSpec& spec) {
  using gridfault::Complex;
  const int n = spec.bus_count();
  gridfault::CMatrix y = gridfault::CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) y(k, k) += spec.bus(k).shunt;
  for (int l = 0; l < spec.line_count(); ++l) {
    const gridfault::Line& line = spec.line(l);
    const int i = spec.bus_index(line.from);
    const int j = spec.bus_index(line.to);
    const Complex ys = Complex(1.0, 0.0) / line.z;
    y(i, i) += ys + Complex(0.0, line.charging / 2.0);
    y(j, j) += ys + Complex(0.0, line.charging / 2.0);
    y(i, j) -= ys;
    y(j, i) -= ys;
  }
  return y;
}

// Eliminate the last node of a matrix by Kron reduction.
inline gridfault::CMatrix kron_reduce_last(const gridfault::CMatrix& y) {
  const int n = static_cast<int>(y.rows()) - 1;
  gridfault::CMatrix reduced = y.topLeftCorner(n, n);
  const gridfault::Complex pivot = y(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      reduced(i, j) -= y(i, n) * y(n, j) / pivot;
    }
  }
  return reduced;
}

// Random connected grid: a spanning tree plus a few chords, reactive lines.
inline gridfault::GridSpec random_grid(int n, std::mt19937_64& rng,
                                       bool with_charging = true) {
  using gridfault::Bus;
  using gridfault::Line;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Bus> buses;
  for (int k = 1; k <= n; ++k) {
    Bus bus;
    bus.id = k;
    bus.load = {0.2 * unit(rng), 0.1 * unit(rng)};
    buses.push_back(bus);
  }
  std::vector<Line> lines;
  auto add_line = [&](int from, int to) {
    Line line;
    line.id = static_cast<int>(lines.size()) + 1;
    line.from = from;
    line.to = to;
    line.z = {0.002 + 0.01 * unit(rng), 0.02 + 0.1 * unit(rng)};
    line.charging = with_charging ? 0.2 * unit(rng) : 0.0;
    lines.push_back(line);
  };
  for (int k = 2; k <= n; ++k) {
    std::uniform_int_distribution<int> parent(1, k - 1);
    add_line(parent(rng), k);
  }
  int chords = n / 3;
  int guard = 0;
  while (chords > 0 && guard < 100) {
    ++guard;
    std::uniform_int_distribution<int> pick(1, n);
    int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    bool duplicate = false;
    for (const Line& line : lines) {
      if ((line.from == a && line.to == b) ||
          (line.from == b && line.to == a)) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    add_line(a, b);
    --chords;
  }
  return gridfault::GridSpec(std::move(buses), std::move(lines));
}

}  // namespace gftest
