#include "hoferkit/flow.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hoferkit {

namespace {

constexpr double kStepRemainderTol = 1e-12;

// Reusable buffers for one integration; keeps the stepping loop free of
// heap traffic.  x_warm carries the converged midpoint field of the
// previous full step as the next predictor.
struct Workspace {
  std::vector<double> grad;
  std::vector<double> x;
  std::vector<double> mid;
  std::vector<double> z;
  std::vector<double> z_next;
  std::vector<double> x_warm;
  bool has_warm = false;
  explicit Workspace(std::size_t dim)
      : grad(dim), x(dim), mid(dim), z(dim), z_next(dim), x_warm(dim) {}
};

void eval_vector_field(const Hamiltonian& h, double t, std::span<const double> m, Workspace& ws) {
  std::fill(ws.grad.begin(), ws.grad.end(), 0.0);
  h.accumulate_gradient(t, m, 1.0, ws.grad);
  apply_j0(ws.grad, ws.x);
}

// One implicit midpoint step m -> m + dt X(t + dt/2, (m + out)/2); dt may be
// negative.  m and out may alias.  Cold steps seed the fixed point with an
// Euler predictor; warm steps reuse the previous step's field, which keeps a
// trajectory's full-step states independent of whether a partial step
// follows (partial steps always run cold).
void midpoint_step(const Hamiltonian& h, double t, double dt, std::span<const double> m,
                   std::span<double> out, const FixedPointOptions& fp, Workspace& ws,
                   bool chain_warm) {
  const std::size_t dim = m.size();
  const double tm = t + 0.5 * dt;
  double scale = 1.0;
  for (std::size_t i = 0; i < dim; ++i) scale = std::max(scale, std::abs(m[i]));

  if (chain_warm && ws.has_warm) {
    for (std::size_t i = 0; i < dim; ++i) ws.z[i] = m[i] + dt * ws.x_warm[i];
  } else {
    eval_vector_field(h, tm, m, ws);
    for (std::size_t i = 0; i < dim; ++i) ws.z[i] = m[i] + dt * ws.x[i];
  }

  for (int iter = 0; iter < fp.max_iterations; ++iter) {
    for (std::size_t i = 0; i < dim; ++i) ws.mid[i] = 0.5 * (m[i] + ws.z[i]);
    eval_vector_field(h, tm, ws.mid, ws);
    double delta = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      ws.z_next[i] = m[i] + dt * ws.x[i];
      delta = std::max(delta, std::abs(ws.z_next[i] - ws.z[i]));
    }
    ws.z.swap(ws.z_next);
    if (delta <= fp.tolerance * scale) {
      std::copy(ws.z.begin(), ws.z.end(), out.begin());
      if (chain_warm) {
        ws.x_warm = ws.x;
        ws.has_warm = true;
      }
      return;
    }
  }
  std::ostringstream msg;
  msg << "implicit midpoint failed to converge in " << fp.max_iterations
      << " iterations at t=" << t << " (step " << dt << " too large for this field)";
  throw FlowError(msg.str());
}

void check_time_range(double t) {
  if (t < -1e-12 || t > 1.0 + 1e-12) throw std::invalid_argument("flow time must lie in [0,1]");
}

struct VecLess {
  bool operator()(const std::vector<double>& a, const std::vector<double>& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

}  // namespace

struct FlowMap::Impl {
  HamiltonianPtr field;
  double step = 1e-3;
  FixedPointOptions fp;
  int steps_per_unit = 0;

  mutable std::mutex mu;
  mutable std::map<std::vector<double>, std::shared_ptr<const Mat>, VecLess> cache;
  mutable std::atomic<bool> cache_nonempty{false};

  // Integrates 0 -> 1 keeping every grid state; column k is the state at
  // time k*step.
  Mat full_trajectory(const Vec& seed) const {
    const int dim = static_cast<int>(seed.size());
    Mat states(dim, steps_per_unit + 1);
    states.col(0) = seed;
    Workspace ws(static_cast<std::size_t>(dim));
    std::vector<double> cur(seed.data(), seed.data() + dim);
    for (int k = 0; k < steps_per_unit; ++k) {
      midpoint_step(*field, k * step, step, cur, cur, fp, ws, true);
      for (int d = 0; d < dim; ++d) states(d, k + 1) = cur[static_cast<std::size_t>(d)];
    }
    return states;
  }

  std::shared_ptr<const Mat> cached_trajectory(const Vec& seed) const {
    std::vector<double> key(seed.data(), seed.data() + seed.size());
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
    }
    auto traj = std::make_shared<const Mat>(full_trajectory(seed));
    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.emplace(std::move(key), std::move(traj));
    cache_nonempty.store(true, std::memory_order_release);
    return it->second;  // write-once: a racing insert wins, results identical
  }

  std::shared_ptr<const Mat> lookup(const Vec& seed) const {
    if (!cache_nonempty.load(std::memory_order_acquire)) return nullptr;
    std::vector<double> key(seed.data(), seed.data() + seed.size());
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    return it == cache.end() ? nullptr : it->second;
  }

  Vec state_from_trajectory(const Mat& states, double t) const {
    const int k = std::min(static_cast<int>(std::floor(t / step + kStepRemainderTol)),
                           steps_per_unit);
    const double remainder = t - k * step;
    Vec m = states.col(k);
    if (remainder > kStepRemainderTol) {
      Workspace ws(static_cast<std::size_t>(m.size()));
      std::vector<double> cur(m.data(), m.data() + m.size());
      midpoint_step(*field, k * step, remainder, cur, cur, fp, ws, false);
      for (int d = 0; d < m.size(); ++d) m[d] = cur[static_cast<std::size_t>(d)];
    }
    return m;
  }

  Vec forward(const Vec& m0, double t) const {
    if (auto traj = lookup(m0)) return state_from_trajectory(*traj, t);
    const std::size_t dim = static_cast<std::size_t>(m0.size());
    Workspace ws(dim);
    std::vector<double> cur(m0.data(), m0.data() + m0.size());
    const int full = static_cast<int>(std::floor(t / step + kStepRemainderTol));
    for (int k = 0; k < full; ++k) midpoint_step(*field, k * step, step, cur, cur, fp, ws, true);
    const double remainder = t - full * step;
    if (remainder > kStepRemainderTol)
      midpoint_step(*field, full * step, remainder, cur, cur, fp, ws, false);
    return Eigen::Map<const Vec>(cur.data(), m0.size());
  }

  Vec backward(const Vec& m0, double t) const {
    const std::size_t dim = static_cast<std::size_t>(m0.size());
    Workspace ws(dim);
    std::vector<double> cur(m0.data(), m0.data() + m0.size());
    const int full = static_cast<int>(std::floor(t / step + kStepRemainderTol));
    double now = t;
    for (int k = 0; k < full; ++k) {
      midpoint_step(*field, now, -step, cur, cur, fp, ws, true);
      now -= step;
    }
    if (now > kStepRemainderTol) midpoint_step(*field, now, -now, cur, cur, fp, ws, false);
    return Eigen::Map<const Vec>(cur.data(), m0.size());
  }
};

FlowMap::FlowMap(HamiltonianPtr field, double step, FixedPointOptions fp)
    : impl_(std::make_shared<Impl>()) {
  if (!field) throw std::invalid_argument("flow map needs a field");
  if (!(step > 0.0) || step > 1.0) throw std::invalid_argument("step must lie in (0,1]");
  impl_->field = std::move(field);
  impl_->step = step;
  impl_->fp = fp;
  // full steps fitting in [0,1]; any remainder is taken as a shortened step
  impl_->steps_per_unit = static_cast<int>(std::floor(1.0 / step + kStepRemainderTol));
}

FlowMap::FlowMap(const TimeField& field, double step, FixedPointOptions fp)
    : FlowMap(std::make_shared<TimeField>(field), step, fp) {}

Vec FlowMap::flow_point(const Vec& m, double t) const {
  check_time_range(t);
  if (m.size() != dim()) throw std::invalid_argument("point dimension does not match field");
  return impl_->forward(m, t);
}

Vec FlowMap::inverse_flow_point(const Vec& m, double t) const {
  check_time_range(t);
  if (m.size() != dim()) throw std::invalid_argument("point dimension does not match field");
  return impl_->backward(m, t);
}

PointCloud FlowMap::flow_cloud(const PointCloud& a, double t) const {
  check_time_range(t);
  if (a.dim() != dim()) throw std::invalid_argument("cloud dimension does not match field");
  Mat out(a.dim(), a.size());
  parallel_for(static_cast<std::size_t>(a.size()), [&](std::size_t i) {
    auto traj = impl_->cached_trajectory(a.point(static_cast<int>(i)));
    out.col(static_cast<int>(i)) = impl_->state_from_trajectory(*traj, t);
  });
  std::string label = a.label().empty() ? "cloud" : a.label();
  char suffix[48];
  std::snprintf(suffix, sizeof(suffix), "@t=%.6g", t);
  return PointCloud(std::move(out), label + suffix, a.provenance());
}

Mat FlowMap::tangent_map(const Vec& m, double t, bool richardson) const {
  check_time_range(t);
  const int n = dim();
  if (m.size() != n) throw std::invalid_argument("point dimension does not match field");
  const double delta = 1e-5;
  auto fd = [&](double h) {
    Mat d(n, n);
    for (int j = 0; j < n; ++j) {
      Vec plus = m, minus = m;
      plus[j] += h;
      minus[j] -= h;
      d.col(j) = (impl_->forward(plus, t) - impl_->forward(minus, t)) / (2.0 * h);
    }
    return d;
  };
  if (!richardson) return fd(delta);
  const Mat coarse = fd(delta);
  const Mat fine = fd(0.5 * delta);
  return (4.0 * fine - coarse) / 3.0;
}

const Mat& FlowMap::trajectory(const Vec& seed) const {
  if (seed.size() != dim()) throw std::invalid_argument("point dimension does not match field");
  // entries are never evicted, so the reference stays valid for the
  // FlowMap's lifetime
  return *impl_->cached_trajectory(seed);
}

double FlowMap::step() const { return impl_->step; }
int FlowMap::dim() const { return impl_->field->dim(); }
const Hamiltonian& FlowMap::field() const { return *impl_->field; }
HamiltonianPtr FlowMap::field_ptr() const { return impl_->field; }

Vec hamiltonian_vector_field(const Hamiltonian& h, double t, const Vec& m) {
  Vec g = Vec::Zero(m.size());
  h.accumulate_gradient(t, {m.data(), static_cast<std::size_t>(m.size())}, 1.0,
                        {g.data(), static_cast<std::size_t>(g.size())});
  Vec x(m.size());
  apply_j0({g.data(), static_cast<std::size_t>(g.size())},
           {x.data(), static_cast<std::size_t>(x.size())});
  return x;
}

double symplecticity_defect(const Mat& d) {
  const Mat j = j0_matrix(static_cast<int>(d.rows()));
  return (d.transpose() * j * d - j).cwiseAbs().maxCoeff();
}

void write_trajectory_csv(const std::string& path, const FlowMap& fm, const Vec& seed) {
  const Mat& states = fm.trajectory(seed);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t";
  for (int d = 0; d < fm.dim(); ++d) out << ",m" << d + 1;
  out << "\n";
  char buf[64];
  for (int k = 0; k < states.cols(); ++k) {
    const double t = std::min(1.0, k * fm.step());
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    out << buf;
    for (int d = 0; d < fm.dim(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", states(d, k));
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace hoferkit
