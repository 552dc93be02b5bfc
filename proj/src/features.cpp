#include "gridfault/features.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace gridfault {

FeatureVector feature_full(const AdmittanceMatrix& y0, const CVector& u_pre,
                           const CVector& u_fault, int label,
                           FeaturePart part) {
  const int n = y0.dimension();
  if (u_pre.size() != n || u_fault.size() != n) {
    throw ValidationError("voltage vector length does not match admittance");
  }
  FeatureVector out;
  const CVector psi = y0.y * (u_fault - u_pre);
  out.values = part == FeaturePart::Imaginary ? psi.imag().eval()
                                              : psi.real().eval();
  out.label = label;
  return out;
}

FeatureVector feature_partial(const AdmittanceMatrix& y0, const CVector& u_pre,
                              const CVector& u_fault, const GridSpec& spec,
                              const std::vector<int>& observed_bus_ids,
                              int label, FeaturePart part) {
  const int n = y0.dimension();
  if (u_pre.size() != n || u_fault.size() != n) {
    throw ValidationError("voltage vector length does not match admittance");
  }
  if (observed_bus_ids.empty()) {
    throw ValidationError("observed bus set must not be empty");
  }
  std::set<int> unique(observed_bus_ids.begin(), observed_bus_ids.end());
  FeatureVector out;
  out.values = RVector::Zero(n);
  out.observed.assign(unique.begin(), unique.end());
  out.label = label;
  for (int bus_id : out.observed) {
    const int p = spec.bus_index(bus_id);  // throws on unknown id
    const Complex du = u_fault(p) - u_pre(p);
    const CVector column = y0.y.col(p) * du;
    out.values += part == FeaturePart::Imaginary ? column.imag().eval()
                                                 : column.real().eval();
  }
  return out;
}

CVector unbalanced_current(const AdmittanceMatrix& y0,
                           const FaultAugmentedMatrix& yf,
                           const CVector& u_fault, Complex u_fault_point) {
  const int n = y0.dimension();
  if (yf.base.dimension() != n + 1) {
    throw ValidationError("fault matrix does not match admittance dimension");
  }
  if (u_fault.size() != n) {
    throw ValidationError("voltage vector length does not match admittance");
  }
  const int i = yf.from_index;
  const int j = yf.to_index;
  // dIu = (Y0 - Y') U' - y_f1 U_f, nonzero only at the faulted terminals.
  CVector out = CVector::Zero(n);
  const CMatrix& f = yf.base.y;
  out(i) = (y0.y(i, i) - f(i, i)) * u_fault(i) +
           (y0.y(i, j) - f(i, j)) * u_fault(j) - f(i, n) * u_fault_point;
  out(j) = (y0.y(j, i) - f(j, i)) * u_fault(i) +
           (y0.y(j, j) - f(j, j)) * u_fault(j) - f(j, n) * u_fault_point;
  return out;
}

LabeledSet extract_features(const Dataset& dataset, const GridSpec& spec,
                            const std::vector<int>& observed_bus_ids,
                            FeaturePart part) {
  const AdmittanceMatrix y0 = build_admittance(spec);
  const int n = spec.bus_count();
  LabeledSet set;
  set.x.resize(static_cast<int>(dataset.scenarios.size()), n);
  set.y.reserve(dataset.scenarios.size());
  for (std::size_t s = 0; s < dataset.scenarios.size(); ++s) {
    const FaultScenario& scenario = dataset.scenarios[s];
    FeatureVector f =
        observed_bus_ids.empty()
            ? feature_full(y0, scenario.u_pre, scenario.u_fault,
                           scenario.label, part)
            : feature_partial(y0, scenario.u_pre, scenario.u_fault, spec,
                              observed_bus_ids, scenario.label, part);
    set.x.row(static_cast<int>(s)) = f.values.transpose();
    set.y.push_back(scenario.label);
  }
  return set;
}

FeatureScaler FeatureScaler::fit(const LabeledSet& train_set) {
  if (train_set.size() == 0) {
    throw ValidationError("cannot fit a scaler on an empty set");
  }
  FeatureScaler scaler;
  scaler.mean = train_set.x.colwise().mean();
  scaler.scale.resize(train_set.x.cols());
  for (int c = 0; c < train_set.x.cols(); ++c) {
    const double variance =
        (train_set.x.col(c).array() - scaler.mean(c)).square().mean();
    scaler.scale(c) = 1.0 / (std::sqrt(variance) + 1e-9);
  }
  return scaler;
}

void FeatureScaler::apply(LabeledSet& set) const {
  if (set.x.cols() != mean.size()) {
    throw ValidationError("scaler dimension does not match features");
  }
  for (int c = 0; c < set.x.cols(); ++c) {
    set.x.col(c) = (set.x.col(c).array() - mean(c)) * scale(c);
  }
}

RVector FeatureScaler::transform(const RVector& x) const {
  if (x.size() != mean.size()) {
    throw ValidationError("scaler dimension does not match features");
  }
  return (x - mean).cwiseProduct(scale);
}

void export_features_csv(const LabeledSet& set,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write features " + path.string());
  out << "label";
  for (int k = 1; k <= set.x.cols(); ++k) out << ",psi_" << k;
  out << "\n";
  char buf[32];
  for (int r = 0; r < set.x.rows(); ++r) {
    out << set.y[r];
    for (int c = 0; c < set.x.cols(); ++c) {
      double v = set.x(r, c);
      std::snprintf(buf, sizeof(buf), "%.17g", v == 0.0 ? 0.0 : v);
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace gridfault
