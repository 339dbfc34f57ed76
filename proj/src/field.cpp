#include "hoferkit/field.hpp"

#include <algorithm>
#include <cmath>

namespace hoferkit {

SmoothTruncator::SmoothTruncator(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("truncator level must be >= 1");
}

double SmoothTruncator::operator()(double s) const {
  const double hi = 1.0 / n_;
  const double lo = 0.5 / n_;
  const double a = std::abs(s);
  if (a >= hi) return s;
  if (a <= lo) return 0.0;
  return s * quintic_smoothstep((a - lo) / (hi - lo));
}

double SmoothTruncator::derivative(double s) const {
  const double hi = 1.0 / n_;
  const double lo = 0.5 / n_;
  const double a = std::abs(s);
  if (a >= hi) return 1.0;
  if (a <= lo) return 0.0;
  const double u = (a - lo) / (hi - lo);
  return quintic_smoothstep(u) + a * quintic_smoothstep_deriv(u) / (hi - lo);
}

SmoothTruncator make_truncator(int n) { return SmoothTruncator(n); }

SpaceField::SpaceField(int dim, ExprPtr expr)
    : dim_(dim), expr_(std::move(expr)), tape_(std::make_shared<Tape>(expr_)) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("field dimension must be even and >= 2");
  if (max_coord_index(*expr_) >= dim)
    throw std::invalid_argument("expression references coordinates beyond the field dimension");
  support_radius_ = hoferkit::support_radius(*expr_);
}

json SpaceField::to_json() const {
  json j;
  j["dim"] = dim_;
  j["expr"] = expr_to_json(*expr_);
  return j;
}

SpaceField SpaceField::from_json(const json& j) {
  return SpaceField(j.at("dim").get<int>(), expr_from_json(j.at("expr")));
}

SpaceField coordinate(int dim, int index) {
  if (index < 0 || index >= dim) throw std::invalid_argument("coordinate index out of range");
  return SpaceField(dim, expr_coord(index));
}

SpaceField constant(int dim, double value) { return SpaceField(dim, expr_const(value)); }

SpaceField make_bump(const Vec& center, double inner_r, double outer_r) {
  std::vector<double> c(center.data(), center.data() + center.size());
  return SpaceField(static_cast<int>(center.size()), expr_bump(std::move(c), inner_r, outer_r));
}

namespace {
void check_same_dim(const SpaceField& a, const SpaceField& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("field dimensions do not match");
}
}  // namespace

SpaceField operator+(const SpaceField& a, const SpaceField& b) {
  check_same_dim(a, b);
  return SpaceField(a.dim(), expr_sum({a.expr(), b.expr()}));
}

SpaceField operator-(const SpaceField& a, const SpaceField& b) {
  check_same_dim(a, b);
  return SpaceField(a.dim(), expr_sum({a.expr(), expr_scale(-1.0, b.expr())}));
}

SpaceField operator*(const SpaceField& a, const SpaceField& b) {
  check_same_dim(a, b);
  return SpaceField(a.dim(), expr_product({a.expr(), b.expr()}));
}

SpaceField operator*(double c, const SpaceField& f) {
  return SpaceField(f.dim(), expr_scale(c, f.expr()));
}

SpaceField compose_poly(std::vector<double> coeffs, const SpaceField& inner) {
  return SpaceField(inner.dim(), expr_poly1(std::move(coeffs), inner.expr()));
}

SpaceField compose_smoothstep(double edge0, double edge1, const SpaceField& inner) {
  return SpaceField(inner.dim(), expr_smoothstep(edge0, edge1, inner.expr()));
}

SpaceField compose(const SmoothTruncator& trunc, const SpaceField& inner) {
  return SpaceField(inner.dim(), expr_truncator(trunc.level(), inner.expr()));
}

SpaceField partial_derivative(const SpaceField& f, int coord) {
  if (coord < 0 || coord >= f.dim()) throw std::invalid_argument("coordinate index out of range");
  return SpaceField(f.dim(), expr_partial(f.expr(), coord));
}

double evaluate(const SpaceField& f, const Vec& m) {
  if (m.size() != f.dim()) throw std::invalid_argument("point dimension does not match field");
  return f.value(m);
}

Vec gradient(const SpaceField& f, const Vec& m) {
  if (m.size() != f.dim()) throw std::invalid_argument("point dimension does not match field");
  Vec g = Vec::Zero(m.size());
  f.accumulate_gradient({m.data(), static_cast<std::size_t>(m.size())}, 1.0,
                        {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

TimeProfile::TimeProfile() : knots_{0.0, 1.0}, segments_{{0.0}} {}

TimeProfile::TimeProfile(std::vector<double> knots, std::vector<std::vector<double>> segments)
    : knots_(std::move(knots)), segments_(std::move(segments)) {
  if (knots_.size() < 2 || segments_.size() + 1 != knots_.size())
    throw std::invalid_argument("profile needs k+1 knots for k segments");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw std::invalid_argument("profile knots must be ascending");
}

TimeProfile TimeProfile::constant(double c) { return TimeProfile({0.0, 1.0}, {{c}}); }

TimeProfile TimeProfile::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("profile polynomial needs coefficients");
  return TimeProfile({0.0, 1.0}, {std::move(coeffs)});
}

TimeProfile TimeProfile::smooth_knots(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("smooth_knots needs at least two values");
  const std::size_t k = values.size() - 1;
  std::vector<double> knots(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    knots[i] = static_cast<double>(i) / static_cast<double>(k);
  // On [t_i, t_i+1]: v_i + (v_{i+1}-v_i) * S((t-t_i)/h) with S the quintic
  // smoothstep; zero first and second derivatives at every knot make the
  // interpolant C^2 with polynomial segments.
  const double h = 1.0 / static_cast<double>(k);
  std::vector<std::vector<double>> segs(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double a = values[i];
    const double d = values[i + 1] - values[i];
    // S(u) = 10u^3 - 15u^4 + 6u^5 with u = (t - t_i)/h; expand in powers
    // of w = t - t_i, then shift to the global variable t.
    const double h3 = h * h * h;
    const double h4 = h3 * h;
    const double h5 = h4 * h;
    std::vector<double> local = {a, 0.0, 0.0, 10.0 * d / h3, -15.0 * d / h4, 6.0 * d / h5};
    // p(t) = sum_j local[j] (t - t_i)^j; expand via binomial shift.
    std::vector<double> global(local.size(), 0.0);
    const double ti = knots[i];
    for (std::size_t j = 0; j < local.size(); ++j) {
      double binom = 1.0;
      double power = 1.0;
      for (std::size_t r = 0; r <= j; ++r) {
        global[j - r] += local[j] * binom * power;
        binom *= static_cast<double>(j - r) / static_cast<double>(r + 1);
        power *= -ti;
      }
    }
    segs[i] = std::move(global);
  }
  return TimeProfile(std::move(knots), std::move(segs));
}

std::size_t TimeProfile::segment_for(double t) const {
  if (t <= knots_.front()) return 0;
  if (t >= knots_.back()) return segments_.size() - 1;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
}

double TimeProfile::operator()(double t) const {
  const auto& c = segments_[segment_for(t)];
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
  return v;
}

namespace {
// q(t) = p(a*t + b) expanded in ascending coefficients.
std::vector<double> poly_compose_affine(const std::vector<double>& p, double a, double b) {
  std::vector<double> q = {p.empty() ? 0.0 : p.back()};
  for (std::size_t i = p.size() - 1; i-- > 0;) {
    // q <- q * (a t + b) + p[i]
    std::vector<double> next(q.size() + 1, 0.0);
    for (std::size_t j = 0; j < q.size(); ++j) {
      next[j + 1] += q[j] * a;
      next[j] += q[j] * b;
    }
    next[0] += p[i];
    q = std::move(next);
  }
  return q;
}
}  // namespace

TimeProfile TimeProfile::reversed() const {
  const std::size_t k = segments_.size();
  std::vector<double> knots(knots_.size());
  std::vector<std::vector<double>> segs(k);
  for (std::size_t i = 0; i < knots_.size(); ++i) knots[i] = 1.0 - knots_[knots_.size() - 1 - i];
  for (std::size_t i = 0; i < k; ++i) segs[i] = poly_compose_affine(segments_[k - 1 - i], -1.0, 1.0);
  return TimeProfile(std::move(knots), std::move(segs));
}

TimeProfile TimeProfile::reparam(double s) const {
  if (s == 0.0) return TimeProfile::constant(0.0);
  std::vector<double> knots(knots_.size());
  std::vector<std::vector<double>> segs(segments_.size());
  for (std::size_t i = 0; i < knots_.size(); ++i) knots[i] = knots_[i] / s;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    segs[i] = poly_compose_affine(segments_[i], s, 0.0);
    for (double& c : segs[i]) c *= s;
  }
  return TimeProfile(std::move(knots), std::move(segs));
}

TimeProfile TimeProfile::scaled(double c) const {
  std::vector<std::vector<double>> segs = segments_;
  for (auto& seg : segs)
    for (double& x : seg) x *= c;
  return TimeProfile(knots_, std::move(segs));
}

json TimeProfile::to_json() const {
  json j;
  j["knots"] = knots_;
  j["segments"] = segments_;
  return j;
}

TimeProfile TimeProfile::from_json(const json& j) {
  return TimeProfile(j.at("knots").get<std::vector<double>>(),
                     j.at("segments").get<std::vector<std::vector<double>>>());
}

double Hamiltonian::value_at(double t, const Vec& m) const {
  return value(t, {m.data(), static_cast<std::size_t>(m.size())});
}

Vec Hamiltonian::gradient_at(double t, const Vec& m) const {
  Vec g = Vec::Zero(m.size());
  accumulate_gradient(t, {m.data(), static_cast<std::size_t>(m.size())}, 1.0,
                      {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

TimeField::TimeField(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw std::invalid_argument("time field needs at least one term");
  dim_ = terms_.front().space.dim();
  for (const auto& term : terms_)
    if (term.space.dim() != dim_) throw std::invalid_argument("term dimensions do not match");
  support_radius_ = 0.0;
  for (const auto& term : terms_)
    support_radius_ = std::max(support_radius_, term.space.support_radius());
}

TimeField TimeField::autonomous(const SpaceField& f) {
  return TimeField({Term{TimeProfile::constant(1.0), f}});
}

TimeField TimeField::zero(int dim) {
  return TimeField({Term{TimeProfile::constant(0.0), constant(dim, 0.0)}});
}

double TimeField::value(double t, std::span<const double> m) const {
  double v = 0.0;
  for (const auto& term : terms_) {
    const double p = term.profile(t);
    if (p != 0.0) v += p * term.space.value(m);
  }
  return v;
}

void TimeField::accumulate_gradient(double t, std::span<const double> m, double scale,
                                    std::span<double> out) const {
  for (const auto& term : terms_) {
    const double p = term.profile(t);
    if (p != 0.0) term.space.accumulate_gradient(m, scale * p, out);
  }
}

SpaceField TimeField::at_time(double t) const {
  std::vector<ExprPtr> parts;
  parts.reserve(terms_.size());
  for (const auto& term : terms_) parts.push_back(expr_scale(term.profile(t), term.space.expr()));
  return SpaceField(dim_, expr_sum(std::move(parts)));
}

json TimeField::to_json() const {
  json j;
  j["dim"] = dim_;
  json terms = json::array();
  for (const auto& term : terms_) {
    json tj;
    tj["profile"] = term.profile.to_json();
    tj["space"] = expr_to_json(*term.space.expr());
    terms.push_back(std::move(tj));
  }
  j["terms"] = std::move(terms);
  return j;
}

TimeField TimeField::from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  std::vector<Term> terms;
  for (const auto& tj : j.at("terms"))
    terms.push_back(Term{TimeProfile::from_json(tj.at("profile")),
                         SpaceField(dim, expr_from_json(tj.at("space")))});
  return TimeField(std::move(terms));
}

namespace {
void check_time(double t) {
  if (t < -1e-9 || t > 1.0 + 1e-9) throw std::invalid_argument("time must lie in [0,1]");
}
}  // namespace

double evaluate(const TimeField& f, double t, const Vec& m) {
  check_time(t);
  if (m.size() != f.dim()) throw std::invalid_argument("point dimension does not match field");
  return f.value_at(t, m);
}

Vec gradient(const TimeField& f, double t, const Vec& m) {
  check_time(t);
  if (m.size() != f.dim()) throw std::invalid_argument("point dimension does not match field");
  return f.gradient_at(t, m);
}

}  // namespace hoferkit
