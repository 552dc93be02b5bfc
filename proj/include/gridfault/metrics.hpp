#pragma once

#include <vector>

#include "gridfault/grid.hpp"

namespace gridfault {

/// Location accuracy rate: fraction of cases whose top-ranked class equals
/// the label.
double lar(const std::vector<int>& predicted, const std::vector<int>& labels);

/// Average rank of the correct class: mean 1-based position of the label in
/// each descending-probability ranking.
double arc(const std::vector<std::vector<int>>& rankings,
           const std::vector<int>& labels);

struct HopTable {
  double exact = 0.0;
  double within_one = 0.0;  // cumulative
  double within_two = 0.0;  // cumulative
  int evaluated = 0;        // faulted cases considered
};

/// Line-graph distance of each top prediction from the true faulted line.
/// Predictions on the null class count beyond two hops; true-null cases are
/// not evaluated here.
HopTable hop_analysis(const std::vector<int>& predicted,
                      const std::vector<int>& labels, const GridSpec& spec);

/// Normalized mean deviation of pre-fault snapshots from the training mean,
/// including the 1/n factor.
double uncertainty_index(const std::vector<CVector>& test_u_pre,
                         const CVector& train_mean_u_pre);

}  // namespace gridfault
