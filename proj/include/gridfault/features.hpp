#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gridfault/faultgen.hpp"
#include "gridfault/grid.hpp"

namespace gridfault {

using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Which part of the complex feature feeds the classifier. Imaginary is the
/// default; the real part is kept for ablation runs.
enum class FeaturePart { Imaginary, Real };

/// Classifier input: one part of Y0 dU restricted to the measured buses.
/// Always length n; zero outside the reach of the observed set.
struct FeatureVector {
  RVector values;
  std::vector<int> observed;  // measured bus ids, sorted; empty means all
  int label = 0;
};

FeatureVector feature_full(const AdmittanceMatrix& y0, const CVector& u_pre,
                           const CVector& u_fault, int label,
                           FeaturePart part = FeaturePart::Imaginary);

/// Partial observability: values from Ybar0 dUbar where Ybar0 keeps the
/// columns of the measured buses. Support is contained in S union N(S).
FeatureVector feature_partial(const AdmittanceMatrix& y0, const CVector& u_pre,
                              const CVector& u_fault, const GridSpec& spec,
                              const std::vector<int>& observed_bus_ids,
                              int label,
                              FeaturePart part = FeaturePart::Imaginary);

/// The two-entry fault signature at the faulted line's terminals, from the
/// during-fault voltages and the pre/during-fault admittance difference.
CVector unbalanced_current(const AdmittanceMatrix& y0,
                           const FaultAugmentedMatrix& yf,
                           const CVector& u_fault, Complex u_fault_point);

struct LabeledSet {
  RMatrix x;  // one row per sample
  std::vector<int> y;
  int size() const { return static_cast<int>(y.size()); }
};

/// Feature matrix for a whole dataset; empty observed set means full
/// observability.
LabeledSet extract_features(const Dataset& dataset, const GridSpec& spec,
                            const std::vector<int>& observed_bus_ids = {},
                            FeaturePart part = FeaturePart::Imaginary);

/// Per-feature affine standardization fitted on a training set. Off by
/// default in every pipeline; opt in through the experiment config.
struct FeatureScaler {
  RVector mean;
  RVector scale;  // 1 / (sd + floor)

  static FeatureScaler fit(const LabeledSet& train_set);
  void apply(LabeledSet& set) const;
  RVector transform(const RVector& x) const;
};

void export_features_csv(const LabeledSet& set,
                         const std::filesystem::path& path);

}  // namespace gridfault
