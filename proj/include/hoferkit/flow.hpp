#pragma once

// Hamiltonian isotopies on standard R^{2n} for the convention
// omega(., X_H) = dH, i.e. X_H = J0 grad H in block coordinates.
// Integrator: implicit midpoint with fixed step (symplectic for
// time-dependent fields), fixed-point inner iteration.

#include "hoferkit/field.hpp"
#include "hoferkit/pointcloud.hpp"
#include "hoferkit/types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace hoferkit {

struct FlowError : std::runtime_error {
  explicit FlowError(const std::string& what) : std::runtime_error(what) {}
};

struct FixedPointOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
};

/// Hamiltonian vector field X_H(t,m) = J0 grad H(t,m).
Vec hamiltonian_vector_field(const Hamiltonian& h, double t, const Vec& m);

/// max-norm of D^T J0 D - J0; zero for exactly symplectic D.
double symplecticity_defect(const Mat& d);

/// Flow map of a fixed field at a fixed step.  Copies share the trajectory
/// cache; cache writes are idempotent and mutex-guarded, so all members are
/// safe to call concurrently.
class FlowMap {
 public:
  FlowMap() = default;
  explicit FlowMap(HamiltonianPtr field, double step = 1e-3, FixedPointOptions fp = {});
  FlowMap(const TimeField& field, double step = 1e-3, FixedPointOptions fp = {});

  /// phi_H^t(m); integrates 0 -> t.  Uses the trajectory cache when this
  /// seed has one (flow_cloud / trajectory populate it), else integrates
  /// fresh on the identical step grid.
  Vec flow_point(const Vec& m, double t) const;

  /// Solves the same ODE backward from t to 0.
  Vec inverse_flow_point(const Vec& m, double t) const;

  /// Pointwise flow of a cloud (parallel per point, cached trajectories).
  PointCloud flow_cloud(const PointCloud& a, double t) const;

  /// Central finite-difference Jacobian of m -> phi^t(m), step 1e-5;
  /// richardson enables one extrapolation level.
  Mat tangent_map(const Vec& m, double t, bool richardson = false) const;

  /// States at every multiple of the step up to t=1 for this seed
  /// (computes and caches on first use).
  const Mat& trajectory(const Vec& seed) const;

  double step() const;
  int dim() const;
  const Hamiltonian& field() const;
  HamiltonianPtr field_ptr() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// CSV dump with columns t, m1..m_{2n} at every cached step of one seed.
void write_trajectory_csv(const std::string& path, const FlowMap& fm, const Vec& seed);

}  // namespace hoferkit
