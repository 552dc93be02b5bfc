#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "gridfault/errors.hpp"

namespace gridfault {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

constexpr double kDefaultTMin = 0.05;

struct Bus {
  int id = 0;
  Complex shunt{0.0, 0.0};  // fixed shunt admittance, p.u.
  Complex load{0.0, 0.0};   // net consumed power, p.u.; generation is negative
};

struct Line {
  int id = 0;
  int from = 0;
  int to = 0;
  Complex z{0.0, 0.0};    // series impedance, p.u.
  double charging = 0.0;  // total line charging susceptance, p.u.
};

/// A parsed test system. Bus and line order is file order; the class label of
/// a line is its position in `lines`. The first bus listed is the voltage
/// reference.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(std::vector<Bus> buses, std::vector<Line> lines);

  int bus_count() const { return static_cast<int>(buses_.size()); }
  int line_count() const { return static_cast<int>(lines_.size()); }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const Bus& bus(int index) const { return buses_.at(index); }
  const Line& line(int index) const { return lines_.at(index); }
  int reference_bus() const { return buses_.front().id; }

  int bus_index(int bus_id) const;    // throws ValidationError on unknown id
  int line_index(int line_id) const;  // throws ValidationError on unknown id

  /// Bus indices adjacent to the bus at `index`.
  const std::vector<int>& neighbors(int index) const {
    return adjacency_.at(index);
  }
  int degree(int index) const {
    return static_cast<int>(adjacency_.at(index).size());
  }

  GridSpec with_loads(std::vector<Complex> loads) const;

 private:
  void validate_and_index();

  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<std::vector<int>> adjacency_;
};

/// Parse the two-section CSV case format (see README). Reports the offending
/// 1-based line number on malformed rows.
GridSpec parse_case(const std::filesystem::path& path);
GridSpec parse_case_text(const std::string& text,
                         const std::string& name = "<memory>");

struct AdmittanceMatrix {
  CMatrix y;
  int dimension() const { return static_cast<int>(y.rows()); }
  Complex entry(int row, int col) const { return y(row, col); }
};

/// Pre-fault bus admittance matrix: off-diagonals -1/z per line, diagonals
/// collect incident 1/z plus bus shunts plus half the charging of each
/// incident line.
AdmittanceMatrix build_admittance(const GridSpec& spec);

struct FaultAugmentedMatrix {
  AdmittanceMatrix base;  // (n+1) x (n+1); node n is the fault point
  int faulted_line = 0;   // line id
  int from_index = 0;
  int to_index = 0;
  double position = 0.0;
  Complex fault_admittance{0.0, 0.0};
};

/// Split line `line_id` at fractional position t: the series branch is
/// replaced by segments i-F (t z) and F-j ((1-t) z), and the fault shunt
/// y_fault is added at F. Terminal charging shunts stay where they are.
FaultAugmentedMatrix augment_fault(const AdmittanceMatrix& y0,
                                   const GridSpec& spec, int line_id, double t,
                                   Complex y_fault,
                                   double t_min = kDefaultTMin);

}  // namespace gridfault
