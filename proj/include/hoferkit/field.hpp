#pragma once

// Scalar fields on R^{2n} and [0,1] x R^{2n} with exact evaluation and
// analytic spatial gradients, plus the smooth primitives (bumps,
// smoothsteps, level truncators) the constructions here are built from.
//
// Smoothness note: bumps, smoothsteps and truncators use C^2 quintic
// blends rather than exp(-1/x) plateaus; every tolerance in this project
// is met at C^2 and the quintic blends avoid underflow at plateau edges.

#include "hoferkit/expr.hpp"
#include "hoferkit/types.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hoferkit {

/// Smooth level truncator f_n: f_n(s) = s exactly for |s| >= 1/n,
/// f_n(s) = 0 exactly for |s| <= 1/(2n), odd and nondecreasing.
class SmoothTruncator {
 public:
  explicit SmoothTruncator(int n);
  int level() const { return n_; }
  double operator()(double s) const;
  double derivative(double s) const;

 private:
  int n_;
};

SmoothTruncator make_truncator(int n);

/// Immutable expression-tree field on R^{2n}.
class SpaceField {
 public:
  SpaceField() = default;
  SpaceField(int dim, ExprPtr expr);

  int dim() const { return dim_; }
  double support_radius() const { return support_radius_; }
  const ExprPtr& expr() const { return expr_; }

  double value(std::span<const double> m) const { return tape_->eval(m); }
  double value(const Vec& m) const { return tape_->eval({m.data(), static_cast<std::size_t>(m.size())}); }
  /// out += scale * grad(m); returns the value.
  double accumulate_gradient(std::span<const double> m, double scale, std::span<double> out) const {
    return tape_->eval_grad(m, scale, out);
  }

  json to_json() const;
  static SpaceField from_json(const json& j);

 private:
  int dim_ = 0;
  ExprPtr expr_;
  std::shared_ptr<const Tape> tape_;
  double support_radius_ = kInfiniteRadius;
};

// Builders (fields combine freely; dimensions must agree).
SpaceField coordinate(int dim, int index);
SpaceField constant(int dim, double value);
SpaceField make_bump(const Vec& center, double inner_r, double outer_r);
SpaceField operator+(const SpaceField& a, const SpaceField& b);
SpaceField operator-(const SpaceField& a, const SpaceField& b);
SpaceField operator*(const SpaceField& a, const SpaceField& b);
SpaceField operator*(double c, const SpaceField& f);
SpaceField compose_poly(std::vector<double> coeffs, const SpaceField& inner);
SpaceField compose_smoothstep(double edge0, double edge1, const SpaceField& inner);
SpaceField compose(const SmoothTruncator& trunc, const SpaceField& inner);
/// Symbolic partial derivative; polynomial subtrees only.
SpaceField partial_derivative(const SpaceField& f, int coord);

// Validated entry points (dimension / time-range checks).
double evaluate(const SpaceField& f, const Vec& m);
Vec gradient(const SpaceField& f, const Vec& m);

/// Piecewise-polynomial time profile on [0,1].  Closed under the affine
/// substitutions used by the transform algebra (t -> 1-t, t -> s*t).
class TimeProfile {
 public:
  TimeProfile();  // constant 0

  static TimeProfile constant(double c);
  static TimeProfile polynomial(std::vector<double> coeffs);
  /// C^2 piecewise-quintic interpolant through equally spaced knot values.
  static TimeProfile smooth_knots(const std::vector<double>& values);

  double operator()(double t) const;
  TimeProfile reversed() const;             // t -> p(1-t)
  TimeProfile reparam(double s) const;      // t -> s*p(s*t)
  TimeProfile scaled(double c) const;

  json to_json() const;
  static TimeProfile from_json(const json& j);

 private:
  // knots_[i] .. knots_[i+1] uses segments_[i], a polynomial in t (global
  // variable, ascending coefficients).  Boundary segments extend outward.
  std::vector<double> knots_;
  std::vector<std::vector<double>> segments_;

  TimeProfile(std::vector<double> knots, std::vector<std::vector<double>> segments);
  std::size_t segment_for(double t) const;
};

/// Time-dependent Hamiltonian oracle: value and spatial gradient at (t,m).
/// Implementations are immutable; both members are pure and safe to call
/// concurrently.
class Hamiltonian {
 public:
  virtual ~Hamiltonian() = default;
  virtual int dim() const = 0;
  virtual double support_radius() const = 0;
  virtual double value(double t, std::span<const double> m) const = 0;
  /// out += scale * spatial gradient at (t, m).
  virtual void accumulate_gradient(double t, std::span<const double> m, double scale,
                                   std::span<double> out) const = 0;

  double value_at(double t, const Vec& m) const;
  Vec gradient_at(double t, const Vec& m) const;
};

using HamiltonianPtr = std::shared_ptr<const Hamiltonian>;

/// H(t,m) = sum_k p_k(t) F_k(m), the separable form every construction in
/// this project uses.  H(t,.) is a SpaceField for each fixed t.
class TimeField final : public Hamiltonian {
 public:
  struct Term {
    TimeProfile profile;
    SpaceField space;
  };

  TimeField() = default;
  explicit TimeField(std::vector<Term> terms);
  static TimeField autonomous(const SpaceField& f);
  static TimeField zero(int dim);

  int dim() const override { return dim_; }
  double support_radius() const override { return support_radius_; }
  double value(double t, std::span<const double> m) const override;
  void accumulate_gradient(double t, std::span<const double> m, double scale,
                           std::span<double> out) const override;

  const std::vector<Term>& terms() const { return terms_; }
  SpaceField at_time(double t) const;

  json to_json() const;
  static TimeField from_json(const json& j);

 private:
  int dim_ = 0;
  std::vector<Term> terms_;
  double support_radius_ = 0.0;
};

double evaluate(const TimeField& f, double t, const Vec& m);
Vec gradient(const TimeField& f, double t, const Vec& m);

}  // namespace hoferkit
