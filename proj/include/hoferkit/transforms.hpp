#pragma once

// Hamiltonian transform algebra and oscillation functionals.
//
// For a generating function G the library provides, among others,
//   reverse_hat:   (t,m) -> -G(1-t, m)        (time reversal)
//   invert_bar:    (t,m) -> -G(t, phi_G^t(m)) (generates the inverse isotopy)
// and their composites, which share a time-one map with the base field
// while moving their oscillation onto a fixed reference set.

#include "hoferkit/field.hpp"
#include "hoferkit/flow.hpp"
#include "hoferkit/pointcloud.hpp"

#include <string>
#include <vector>

namespace hoferkit {

enum class TransformKind {
  reverse_hat,
  invert_bar,
  conjugate_reverse_bar_of_hat,
  conjugate_reverse_hat_of_bar,
  reparam_scale,
  cutoff_normalized,
  value_band,
  level_truncated,
};

std::string to_string(TransformKind kind);

/// A scalar field defined through flow compositions of a base field.
/// Values are exact given the underlying flows; spatial gradients are
/// analytic where the chain rule closes (reverse_hat, reparam, cutoff,
/// value-band, truncation) and central finite differences (step 1e-5)
/// where a flow blocks it (invert_bar and its composites).
class TransformedHamiltonian final : public Hamiltonian {
 public:
  TransformedHamiltonian() = default;
  TransformedHamiltonian(TransformKind kind, HamiltonianPtr impl);

  TransformKind kind() const { return kind_; }
  HamiltonianPtr ptr() const { return impl_; }

  int dim() const override { return impl_->dim(); }
  double support_radius() const override { return impl_->support_radius(); }
  double value(double t, std::span<const double> m) const override {
    return impl_->value(t, m);
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    impl_->accumulate_gradient(t, m, scale, out);
  }

 private:
  TransformKind kind_ = TransformKind::reverse_hat;
  HamiltonianPtr impl_;
};

struct TransformOptions {
  double flow_step = 1e-3;   // step for flows embedded in value oracles
  double fd_step = 1e-5;     // spatial FD step for flow-defined gradients
  FixedPointOptions fixed_point = {};
};

TransformedHamiltonian reverse_hat(const TimeField& h);
TransformedHamiltonian reverse_hat(HamiltonianPtr h);

TransformedHamiltonian invert_bar(const TimeField& g, const FlowMap& fm, double fd_step = 1e-5);
TransformedHamiltonian invert_bar(HamiltonianPtr g, const FlowMap& fm, double fd_step = 1e-5);

enum class ConjugateVariant { bar_of_hat, hat_of_bar };

/// bar_of_hat: K(t,m) = H(1-t, phi_H^{1-t}((phi_H^1)^{-1}(m))), realized as
/// invert_bar(reverse_hat(H)); shares H's time-one map while its moving
/// oscillation equals H's oscillation over a fixed set.
/// hat_of_bar: the variant reverse_hat(invert_bar(H)) with identity
/// K(t, phi_K^t(m)) = H(1-t, phi_H^1(m)).
TransformedHamiltonian conjugate_reverse(const TimeField& h, ConjugateVariant variant,
                                         const TransformOptions& opts = {});

/// Independent route to phi_K^t for the bar_of_hat composite:
/// phi_H^1((phi_H^{1-t})^{-1}(m)).  Needs no gradient of K.
Vec closed_composite_flow(const FlowMap& fm_h, const Vec& m, double t);

TransformedHamiltonian reparam_scale(const TimeField& h, double s);
TransformedHamiltonian reparam_scale(HamiltonianPtr h, double s);

struct CutoffOptions {
  double flow_step = 1e-3;
  int sweep_samples = 65;        // trajectory samples used to size the tube
  double bbox_halfwidth = 50.0;  // reject cutoffs whose support escapes this box
  // For clouds standing in for noncompact sets the generator already takes
  // the value 0 along the far reaches, so no normalization is needed; this
  // returns the base field unchanged.
  bool noncompact_passthrough = false;
};

/// K(t,m) = beta(m) (H(t,m) - f(t)) with f(t) = H(t, phi_H^t(a0)) and beta
/// a bump equal to 1 on a tube around the swept trajectories of a.
/// Along the tube X_K = X_H, the oscillation over the moving cloud is
/// unchanged, and K vanishes along the trajectory of a0.
TransformedHamiltonian cutoff_normalize(const TimeField& h, const PointCloud& a, const Vec& a0,
                                        double margin, const CutoffOptions& opts = {});

struct ValueBandOptions {
  int envelope_samples = 129;     // t-resolution of the min/max envelopes
  int smoother_window = 5;        // moving-average width (time mollifier)
  double zero_crossing_tol = 1e-9;
};

/// K'(t,m) = chi(K(t,m)) K(t,m): a value-band cutoff that is exactly K
/// where K(t,m) lies within [lo(t)-eps/4, hi(t)+eps/4] and vanishes where
/// K(t,m) leaves (lo(t)-eps/2, hi(t)+eps/2), with lo/hi the (mollified)
/// min/max envelopes of K over the moving cloud.  Requires the envelopes
/// to bracket zero.
TransformedHamiltonian value_band_cutoff(HamiltonianPtr k, const PointCloud& a, const FlowMap& fm_k,
                                         double epsilon, const ValueBandOptions& opts = {});
TransformedHamiltonian value_band_cutoff(const TransformedHamiltonian& k, const PointCloud& a,
                                         const FlowMap& fm_k, double epsilon,
                                         const ValueBandOptions& opts = {});

TransformedHamiltonian level_truncate(const TimeField& h, int n);
TransformedHamiltonian level_truncate(HamiltonianPtr h, int n);

// ---- Oscillation functionals -------------------------------------------

double osc_cloud(const Hamiltonian& f, double t, const PointCloud& a);
double osc_cloud(const SpaceField& f, const PointCloud& a);

struct GridSpec {
  Vec lo;
  Vec hi;
  int per_axis = 101;

  int dim() const { return static_cast<int>(lo.size()); }
  long point_count() const;
  Vec point(long flat_index) const;
  static GridSpec covering_support(const Hamiltonian& h, int per_axis);
};

struct OscReport {
  std::string mode;  // restricted | moving | global
  std::vector<double> t_grid;
  std::vector<double> max_values;
  std::vector<double> min_values;
  std::vector<double> osc_values;
  double quadrature = 0.0;  // composite Simpson of osc over [0,1]

  json to_json() const;
  void write_csv(const std::string& path) const;
};

/// Composite Simpson on uniformly spaced samples (odd count >= 3).
double composite_simpson(std::span<const double> values, double a, double b);

OscReport hofer_length_restricted(const Hamiltonian& h, const PointCloud& a, int t_samples = 33);
OscReport hofer_length_moving(const Hamiltonian& h, const PointCloud& a, const FlowMap& fm,
                              int t_samples = 33);
/// Grid oscillation; extra points (e.g. the scenario cloud) may be joined
/// so that cloud oscillations never exceed the global report.
OscReport hofer_length_global(const Hamiltonian& h, const GridSpec& grid, int t_samples = 33,
                              const PointCloud* extra = nullptr);

/// Minimum pairwise distance between the time-one image of a and u;
/// positive certifies disjunction at sampling resolution.
double disjunction_margin(const PointCloud& a, const PointCloud& u, const FlowMap& fm);

}  // namespace hoferkit
