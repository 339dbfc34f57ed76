#include "hoferkit/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hoferkit {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::reverse_hat: return "reverse_hat";
    case TransformKind::invert_bar: return "invert_bar";
    case TransformKind::conjugate_reverse_bar_of_hat: return "conjugate_reverse(bar_of_hat)";
    case TransformKind::conjugate_reverse_hat_of_bar: return "conjugate_reverse(hat_of_bar)";
    case TransformKind::reparam_scale: return "reparam_scale";
    case TransformKind::cutoff_normalized: return "cutoff_normalized";
    case TransformKind::value_band: return "value_band";
    case TransformKind::level_truncated: return "level_truncated";
  }
  return "?";
}

TransformedHamiltonian::TransformedHamiltonian(TransformKind kind, HamiltonianPtr impl)
    : kind_(kind), impl_(std::move(impl)) {
  if (!impl_) throw std::invalid_argument("transformed Hamiltonian needs an implementation");
}

namespace {

class ReverseHatImpl final : public Hamiltonian {
 public:
  explicit ReverseHatImpl(HamiltonianPtr base) : base_(std::move(base)) {}
  int dim() const override { return base_->dim(); }
  double support_radius() const override { return base_->support_radius(); }
  double value(double t, std::span<const double> m) const override {
    return -base_->value(1.0 - t, m);
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    base_->accumulate_gradient(1.0 - t, m, -scale, out);
  }

 private:
  HamiltonianPtr base_;
};

class InvertBarImpl final : public Hamiltonian {
 public:
  InvertBarImpl(HamiltonianPtr base, FlowMap fm, double fd_step)
      : base_(std::move(base)), fm_(std::move(fm)), fd_step_(fd_step) {}
  int dim() const override { return base_->dim(); }
  double support_radius() const override {
    // outside the base support the vector field vanishes, so points there
    // never move and the composed value is still zero
    return base_->support_radius();
  }
  double value(double t, std::span<const double> m) const override {
    Eigen::Map<const Vec> mm(m.data(), static_cast<int>(m.size()));
    const Vec flowed = fm_.flow_point(mm, t);
    return -base_->value(t, {flowed.data(), static_cast<std::size_t>(flowed.size())});
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    std::vector<double> probe(m.begin(), m.end());
    for (std::size_t j = 0; j < m.size(); ++j) {
      probe[j] = m[j] + fd_step_;
      const double up = value(t, probe);
      probe[j] = m[j] - fd_step_;
      const double down = value(t, probe);
      probe[j] = m[j];
      out[j] += scale * (up - down) / (2.0 * fd_step_);
    }
  }

 private:
  HamiltonianPtr base_;
  FlowMap fm_;
  double fd_step_;
};

class ReparamImpl final : public Hamiltonian {
 public:
  ReparamImpl(HamiltonianPtr base, double s) : base_(std::move(base)), s_(s) {}
  int dim() const override { return base_->dim(); }
  double support_radius() const override { return base_->support_radius(); }
  double value(double t, std::span<const double> m) const override {
    return s_ == 0.0 ? 0.0 : s_ * base_->value(s_ * t, m);
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    if (s_ != 0.0) base_->accumulate_gradient(s_ * t, m, scale * s_, out);
  }

 private:
  HamiltonianPtr base_;
  double s_;
};

class CutoffNormalizedImpl final : public Hamiltonian {
 public:
  CutoffNormalizedImpl(HamiltonianPtr base, FlowMap fm, SpaceField beta, Vec a0)
      : base_(std::move(base)), fm_(std::move(fm)), beta_(std::move(beta)), a0_(std::move(a0)) {}
  int dim() const override { return base_->dim(); }
  double support_radius() const override { return beta_.support_radius(); }

  double normalizer(double t) const {  // f(t) = H(t, phi_H^t(a0))
    const Vec p = fm_.flow_point(a0_, t);
    return base_->value(t, {p.data(), static_cast<std::size_t>(p.size())});
  }

  double value(double t, std::span<const double> m) const override {
    const double b = beta_.value(m);
    if (b == 0.0) return 0.0;
    return b * (base_->value(t, m) - normalizer(t));
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    const double b = beta_.value(m);
    const double centered = base_->value(t, m) - normalizer(t);
    beta_.accumulate_gradient(m, scale * centered, out);
    if (b != 0.0) base_->accumulate_gradient(t, m, scale * b, out);
  }

 private:
  HamiltonianPtr base_;
  FlowMap fm_;
  SpaceField beta_;
  Vec a0_;
};

// Piecewise-linear envelope over a uniform grid on [0,1].
struct Envelope {
  std::vector<double> values;
  double operator()(double t) const {
    const double x = std::clamp(t, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(x), values.size() - 2);
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
  }
};

class ValueBandImpl final : public Hamiltonian {
 public:
  ValueBandImpl(HamiltonianPtr base, Envelope lo, Envelope hi, double eps)
      : base_(std::move(base)), lo_(std::move(lo)), hi_(std::move(hi)), eps_(eps) {}
  int dim() const override { return base_->dim(); }
  double support_radius() const override { return base_->support_radius(); }

  // chi as a function of the field value; exactly 1 on the widened band,
  // exactly 0 outside the eps/2 margin.
  double window(double s, double lo, double hi, double* deriv) const {
    const double w = 0.25 * eps_;
    if (s >= lo - w && s <= hi + w) {
      if (deriv) *deriv = 0.0;
      return 1.0;
    }
    if (s <= lo - 2.0 * w || s >= hi + 2.0 * w) {
      if (deriv) *deriv = 0.0;
      return 0.0;
    }
    if (s < lo - w) {
      const double u = (s - (lo - 2.0 * w)) / w;
      if (deriv) *deriv = quintic_smoothstep_deriv(u) / w;
      return quintic_smoothstep(u);
    }
    const double u = (s - (hi + w)) / w;
    if (deriv) *deriv = -quintic_smoothstep_deriv(u) / w;
    return 1.0 - quintic_smoothstep(u);
  }

  double value(double t, std::span<const double> m) const override {
    const double k = base_->value(t, m);
    return window(k, lo_(t), hi_(t), nullptr) * k;
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    const double k = base_->value(t, m);
    double wd = 0.0;
    const double w = window(k, lo_(t), hi_(t), &wd);
    const double factor = w + k * wd;
    if (factor != 0.0) base_->accumulate_gradient(t, m, scale * factor, out);
  }

 private:
  HamiltonianPtr base_;
  Envelope lo_, hi_;
  double eps_;
};

class LevelTruncImpl final : public Hamiltonian {
 public:
  LevelTruncImpl(HamiltonianPtr base, int n) : base_(std::move(base)), trunc_(n) {}
  int dim() const override { return base_->dim(); }
  double support_radius() const override { return base_->support_radius(); }
  double value(double t, std::span<const double> m) const override {
    return trunc_(base_->value(t, m));
  }
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override {
    const double d = trunc_.derivative(base_->value(t, m));
    if (d != 0.0) base_->accumulate_gradient(t, m, scale * d, out);
  }

 private:
  HamiltonianPtr base_;
  SmoothTruncator trunc_;
};

void check_flow_matches(const Hamiltonian& g, const FlowMap& fm) {
  if (fm.dim() != g.dim()) throw std::invalid_argument("flow map dimension does not match field");
  // cheap consistency probe: the flow map must integrate this field
  Vec probe = Vec::Zero(g.dim());
  probe[0] = 0.37;
  const double t = 0.31;
  if (std::abs(fm.field().value_at(t, probe) - g.value_at(t, probe)) > 1e-12)
    throw std::invalid_argument("flow map does not integrate the supplied field");
}

}  // namespace

TransformedHamiltonian reverse_hat(HamiltonianPtr h) {
  return TransformedHamiltonian(TransformKind::reverse_hat,
                                std::make_shared<ReverseHatImpl>(std::move(h)));
}

TransformedHamiltonian reverse_hat(const TimeField& h) {
  return reverse_hat(std::make_shared<TimeField>(h));
}

TransformedHamiltonian invert_bar(HamiltonianPtr g, const FlowMap& fm, double fd_step) {
  check_flow_matches(*g, fm);
  return TransformedHamiltonian(TransformKind::invert_bar,
                                std::make_shared<InvertBarImpl>(std::move(g), fm, fd_step));
}

TransformedHamiltonian invert_bar(const TimeField& g, const FlowMap& fm, double fd_step) {
  return invert_bar(std::make_shared<TimeField>(g), fm, fd_step);
}

TransformedHamiltonian conjugate_reverse(const TimeField& h, ConjugateVariant variant,
                                         const TransformOptions& opts) {
  auto base = std::make_shared<TimeField>(h);
  if (variant == ConjugateVariant::bar_of_hat) {
    auto hat = std::make_shared<ReverseHatImpl>(base);
    FlowMap fm_hat(hat, opts.flow_step, opts.fixed_point);
    return TransformedHamiltonian(
        TransformKind::conjugate_reverse_bar_of_hat,
        std::make_shared<InvertBarImpl>(hat, fm_hat, opts.fd_step));
  }
  FlowMap fm(base, opts.flow_step, opts.fixed_point);
  auto bar = std::make_shared<InvertBarImpl>(base, fm, opts.fd_step);
  return TransformedHamiltonian(TransformKind::conjugate_reverse_hat_of_bar,
                                std::make_shared<ReverseHatImpl>(bar));
}

Vec closed_composite_flow(const FlowMap& fm_h, const Vec& m, double t) {
  return fm_h.flow_point(fm_h.inverse_flow_point(m, 1.0 - t), 1.0);
}

TransformedHamiltonian reparam_scale(HamiltonianPtr h, double s) {
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("reparam scale must lie in [0,1]");
  return TransformedHamiltonian(TransformKind::reparam_scale,
                                std::make_shared<ReparamImpl>(std::move(h), s));
}

TransformedHamiltonian reparam_scale(const TimeField& h, double s) {
  return reparam_scale(std::make_shared<TimeField>(h), s);
}

TransformedHamiltonian cutoff_normalize(const TimeField& h, const PointCloud& a, const Vec& a0,
                                        double margin, const CutoffOptions& opts) {
  if (!(margin > 0.0)) throw std::invalid_argument("cutoff margin must be positive");
  if (!a.contains(a0)) throw std::invalid_argument("a0 must belong to the cloud");
  auto base = std::make_shared<TimeField>(h);
  if (opts.noncompact_passthrough)
    return TransformedHamiltonian(TransformKind::cutoff_normalized, base);
  FlowMap fm(base, opts.flow_step);

  // size the tube: centroid of the swept trajectories plus max excursion
  Vec centroid = Vec::Zero(a.dim());
  double count = 0.0;
  std::vector<Mat> sweeps;
  sweeps.reserve(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) sweeps.push_back(fm.trajectory(a.point(i)));
  const int stride =
      std::max(1, static_cast<int>(sweeps.front().cols()) / std::max(1, opts.sweep_samples - 1));
  for (const Mat& traj : sweeps)
    for (int k = 0; k < traj.cols(); k += stride) {
      centroid += traj.col(k);
      count += 1.0;
    }
  centroid /= count;
  double excursion = 0.0;
  for (const Mat& traj : sweeps)
    for (int k = 0; k < traj.cols(); ++k)
      excursion = std::max(excursion, (traj.col(k) - centroid).norm());

  const double inner = excursion + margin;
  const double outer = inner + margin;
  if (centroid.norm() + outer > opts.bbox_halfwidth) {
    std::ostringstream msg;
    msg << "cutoff support radius " << centroid.norm() + outer << " exceeds the bounding box "
        << opts.bbox_halfwidth << " (margin too large for this scenario)";
    throw std::invalid_argument(msg.str());
  }
  SpaceField beta = make_bump(centroid, inner, outer);
  return TransformedHamiltonian(
      TransformKind::cutoff_normalized,
      std::make_shared<CutoffNormalizedImpl>(base, std::move(fm), std::move(beta), a0));
}

TransformedHamiltonian value_band_cutoff(HamiltonianPtr k, const PointCloud& a,
                                         const FlowMap& fm_k, double epsilon,
                                         const ValueBandOptions& opts) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  check_flow_matches(*k, fm_k);
  const int samples = std::max(5, opts.envelope_samples);

  std::vector<double> raw_lo(samples), raw_hi(samples);
  std::vector<PointCloud> moved(samples);
  for (int j = 0; j < samples; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(samples - 1);
    moved[j] = fm_k.flow_cloud(a, t);
  }
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t j) {
    const double t = static_cast<double>(j) / static_cast<double>(samples - 1);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < moved[j].size(); ++i) {
      const Vec p = moved[j].point(i);
      const double v = k->value(t, {p.data(), static_cast<std::size_t>(p.size())});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    raw_lo[j] = lo;
    raw_hi[j] = hi;
  });

  for (int j = 0; j < samples; ++j) {
    if (raw_lo[j] > opts.zero_crossing_tol || raw_hi[j] < -opts.zero_crossing_tol) {
      std::ostringstream msg;
      msg << "value band requires min <= 0 <= max over the moving cloud; violated at t="
          << static_cast<double>(j) / static_cast<double>(samples - 1) << " (min=" << raw_lo[j]
          << ", max=" << raw_hi[j] << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  // mollify in t, then clamp so the plateau still covers the raw band and
  // the outer edge never leaves the eps/2 margin
  auto smooth = [&](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    const int half = std::max(1, opts.smoother_window / 2);
    for (int j = 0; j < static_cast<int>(v.size()); ++j) {
      double acc = 0.0;
      int n = 0;
      for (int l = std::max(0, j - half); l <= std::min<int>(v.size() - 1, j + half); ++l) {
        acc += v[l];
        ++n;
      }
      out[j] = acc / n;
    }
    return out;
  };
  std::vector<double> hi_s = smooth(raw_hi), lo_s = smooth(raw_lo);
  for (int j = 0; j < samples; ++j) {
    hi_s[j] = std::max(std::min(hi_s[j], raw_hi[j]), raw_hi[j] - 0.25 * epsilon);
    lo_s[j] = std::min(std::max(lo_s[j], raw_lo[j]), raw_lo[j] + 0.25 * epsilon);
  }

  return TransformedHamiltonian(
      TransformKind::value_band,
      std::make_shared<ValueBandImpl>(std::move(k), Envelope{std::move(lo_s)},
                                      Envelope{std::move(hi_s)}, epsilon));
}

TransformedHamiltonian value_band_cutoff(const TransformedHamiltonian& k, const PointCloud& a,
                                         const FlowMap& fm_k, double epsilon,
                                         const ValueBandOptions& opts) {
  return value_band_cutoff(k.ptr(), a, fm_k, epsilon, opts);
}

TransformedHamiltonian level_truncate(HamiltonianPtr h, int n) {
  return TransformedHamiltonian(TransformKind::level_truncated,
                                std::make_shared<LevelTruncImpl>(std::move(h), n));
}

TransformedHamiltonian level_truncate(const TimeField& h, int n) {
  return level_truncate(std::make_shared<TimeField>(h), n);
}

// ---- Oscillation functionals -------------------------------------------

double osc_cloud(const Hamiltonian& f, double t, const PointCloud& a) {
  if (a.dim() != f.dim()) throw std::invalid_argument("cloud dimension does not match field");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < a.size(); ++i) {
    const double v = f.value(t, {a.points().col(i).data(), static_cast<std::size_t>(a.dim())});
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

double osc_cloud(const SpaceField& f, const PointCloud& a) {
  return osc_cloud(TimeField::autonomous(f), 0.0, a);
}

long GridSpec::point_count() const {
  long n = 1;
  for (int d = 0; d < dim(); ++d) n *= per_axis;
  return n;
}

Vec GridSpec::point(long flat_index) const {
  Vec p(dim());
  for (int d = 0; d < dim(); ++d) {
    const long i = flat_index % per_axis;
    flat_index /= per_axis;
    p[d] = per_axis == 1 ? lo[d]
                         : lo[d] + (hi[d] - lo[d]) * static_cast<double>(i) /
                                       static_cast<double>(per_axis - 1);
  }
  return p;
}

GridSpec GridSpec::covering_support(const Hamiltonian& h, int per_axis) {
  double r = h.support_radius();
  if (!std::isfinite(r)) throw std::invalid_argument("field has unbounded support; pass a grid");
  r = std::max(r, 1.0);
  GridSpec g;
  g.lo = Vec::Constant(h.dim(), -r);
  g.hi = Vec::Constant(h.dim(), r);
  g.per_axis = per_axis;
  return g;
}

double composite_simpson(std::span<const double> values, double a, double b) {
  const std::size_t n = values.size();
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("Simpson quadrature needs an odd sample count >= 3");
  const double h = (b - a) / static_cast<double>(n - 1);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i + 1 < n; i += 2) odd += values[i];
  for (std::size_t i = 2; i + 1 < n; i += 2) even += values[i];
  return h / 3.0 * (values.front() + values.back() + 4.0 * odd + 2.0 * even);
}

namespace {

std::vector<double> uniform_grid(int samples) {
  std::vector<double> t(samples);
  for (int i = 0; i < samples; ++i)
    t[i] = static_cast<double>(i) / static_cast<double>(samples - 1);
  return t;
}

OscReport assemble(std::string mode, std::vector<double> t_grid, std::vector<double> lo,
                   std::vector<double> hi) {
  OscReport rep;
  rep.mode = std::move(mode);
  rep.t_grid = std::move(t_grid);
  rep.min_values = std::move(lo);
  rep.max_values = std::move(hi);
  rep.osc_values.resize(rep.t_grid.size());
  for (std::size_t i = 0; i < rep.t_grid.size(); ++i)
    rep.osc_values[i] = rep.max_values[i] - rep.min_values[i];
  rep.quadrature = composite_simpson(rep.osc_values, 0.0, 1.0);
  return rep;
}

void check_samples(int t_samples) {
  if (t_samples < 3 || t_samples % 2 == 0)
    throw std::invalid_argument("t_samples must be odd and >= 3");
}

}  // namespace

OscReport hofer_length_restricted(const Hamiltonian& h, const PointCloud& a, int t_samples) {
  check_samples(t_samples);
  if (a.dim() != h.dim()) throw std::invalid_argument("cloud dimension does not match field");
  auto t_grid = uniform_grid(t_samples);
  std::vector<double> lo(t_grid.size()), hi(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t j) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (int i = 0; i < a.size(); ++i) {
      const double v =
          h.value(t_grid[j], {a.points().col(i).data(), static_cast<std::size_t>(a.dim())});
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    lo[j] = mn;
    hi[j] = mx;
  });
  return assemble("restricted", std::move(t_grid), std::move(lo), std::move(hi));
}

OscReport hofer_length_moving(const Hamiltonian& h, const PointCloud& a, const FlowMap& fm,
                              int t_samples) {
  check_samples(t_samples);
  if (a.dim() != h.dim()) throw std::invalid_argument("cloud dimension does not match field");
  auto t_grid = uniform_grid(t_samples);
  std::vector<double> lo(t_grid.size()), hi(t_grid.size());
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    const PointCloud moved = fm.flow_cloud(a, t_grid[j]);
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (int i = 0; i < moved.size(); ++i) {
      const double v =
          h.value(t_grid[j], {moved.points().col(i).data(), static_cast<std::size_t>(a.dim())});
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    lo[j] = mn;
    hi[j] = mx;
  }
  return assemble("moving", std::move(t_grid), std::move(lo), std::move(hi));
}

OscReport hofer_length_global(const Hamiltonian& h, const GridSpec& grid, int t_samples,
                              const PointCloud* extra) {
  check_samples(t_samples);
  if (grid.dim() != h.dim()) throw std::invalid_argument("grid dimension does not match field");
  const long count = grid.point_count();
  auto t_grid = uniform_grid(t_samples);
  std::vector<double> lo(t_grid.size()), hi(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t j) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (long i = 0; i < count; ++i) {
      const Vec p = grid.point(i);
      const double v = h.value(t_grid[j], {p.data(), static_cast<std::size_t>(p.size())});
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    if (extra) {
      for (int i = 0; i < extra->size(); ++i) {
        const double v = h.value(
            t_grid[j], {extra->points().col(i).data(), static_cast<std::size_t>(extra->dim())});
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
    }
    lo[j] = mn;
    hi[j] = mx;
  });
  return assemble("global", std::move(t_grid), std::move(lo), std::move(hi));
}

json OscReport::to_json() const {
  json j;
  j["mode"] = mode;
  j["t_grid"] = t_grid;
  j["max"] = max_values;
  j["min"] = min_values;
  j["osc"] = osc_values;
  j["quadrature"] = quadrature;
  return j;
}

void OscReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,max,min,osc\n";
  char buf[256];
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", t_grid[i], max_values[i],
                  min_values[i], osc_values[i]);
    out << buf;
  }
}

double disjunction_margin(const PointCloud& a, const PointCloud& u, const FlowMap& fm) {
  return min_pairwise_distance(fm.flow_cloud(a, 1.0), u);
}

}  // namespace hoferkit
