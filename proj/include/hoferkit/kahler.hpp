#pragma once

// Flat Kahler structure on R^{2n} ~ C^n: Poisson brackets for the
// convention omega(., X_H) = dH, index-lowering maps, the dual metric,
// holomorphic bracket identities, Poisson closure of vanishing ideals,
// flow embeddings, and complex-polynomial derivative cascades.

#include "hoferkit/field.hpp"
#include "hoferkit/flow.hpp"
#include "hoferkit/pointcloud.hpp"

#include <complex>
#include <map>
#include <optional>
#include <vector>

namespace hoferkit {

class KahlerStructure {
 public:
  explicit KahlerStructure(int n);

  int n() const { return n_; }
  int dim() const { return 2 * n_; }

  const Mat& j0() const { return j0_; }
  const Mat& theta_omega() const { return theta_omega_; }  // v -> omega(v, .)
  const Mat& theta_g() const { return theta_g_; }          // v -> g(v, .)
  const Mat& g_star() const { return g_star_; }            // dual metric pairing

  double omega(const Vec& v, const Vec& w) const;
  double metric(const Vec& v, const Vec& w) const;
  double dual_metric(const Vec& alpha, const Vec& beta) const;
  /// X_F = -theta_omega^{-1}(dF), the field with omega(., X_F) = dF.
  Vec hamiltonian_field(const Vec& grad) const;

 private:
  int n_;
  Mat j0_, theta_omega_, theta_g_, g_star_, theta_omega_inv_;
};

double poisson_bracket(const SpaceField& f, const SpaceField& g, const KahlerStructure& ks,
                       const Vec& m);
/// Symbolic bracket as a field; polynomial subtrees only.
SpaceField poisson_bracket_field(const SpaceField& f, const SpaceField& g);

// ---- Complex polynomials -------------------------------------------------

using Complex = std::complex<double>;

/// Polynomial in n complex variables, sparse multi-index coefficients.
class CPoly {
 public:
  using Exponents = std::vector<int>;

  explicit CPoly(int nvars);
  CPoly(int nvars, std::map<Exponents, Complex> coeffs);

  int nvars() const { return nvars_; }
  const std::map<Exponents, Complex>& coeffs() const { return coeffs_; }
  bool is_zero(double tol = 0.0) const;

  CPoly& add_term(Exponents exps, Complex coeff);
  Complex eval(const std::vector<Complex>& z) const;
  CPoly partial(int var) const;

  json to_json() const;
  static CPoly from_json(const json& j);

 private:
  int nvars_;
  std::map<Exponents, Complex> coeffs_;
};

CPoly random_cpoly(int nvars, int degree, unsigned seed);

/// Block coordinates (x_1..x_n, y_1..y_n) -> (z_1..z_n), z_j = x_j + i y_j.
std::vector<Complex> point_to_complex(const Vec& m);

/// f = u + i v with u,v expression-tree fields on R^{2n}.
struct HolomorphicSample {
  CPoly poly;
  SpaceField u;
  SpaceField v;
};

/// Expands the polynomial into real/imaginary part fields and verifies the
/// Cauchy-Riemann identity dv o J = du at seeded sample points.
HolomorphicSample make_holomorphic_sample(const CPoly& poly, double cr_tol = 1e-10);

/// max_m |(dv o J) - du| over the given points.
double cauchy_riemann_residual(const HolomorphicSample& h, const KahlerStructure& ks,
                               const PointCloud& points);

struct HolPoisReport {
  double max_bracket_vs_du = 0.0;  // |{u,v} - g*(du,du)|
  double max_du_vs_dv = 0.0;       // |g*(du,du) - g*(dv,dv)|
  double max_cr = 0.0;             // Cauchy-Riemann residual
  json to_json() const;
};

/// Checks {u,v} = g*(du,du) = g*(dv,dv) pointwise.
HolPoisReport holpois_check(const HolomorphicSample& h, const KahlerStructure& ks,
                            const PointCloud& points);

// ---- Vanishing ideals -----------------------------------------------------

/// Finite generating sample of an ideal of functions vanishing on b.
struct FunctionIdeal {
  PointCloud b;
  std::vector<SpaceField> generators;
};

/// Validates that every generator vanishes on every point of b (<= tol).
FunctionIdeal make_function_ideal(PointCloud b, std::vector<SpaceField> generators,
                                  double vanish_tol = 1e-9);

struct ClosureWitness {
  int i = 0;
  int j = 0;
  int point_index = 0;
  double value = 0.0;
};

struct ClosureReport {
  bool closed = true;
  double tol = 0.0;
  std::vector<ClosureWitness> witnesses;
  json to_json(const FunctionIdeal& ideal) const;
};

/// Necessary-condition test: evaluates {F_i,F_j} on every point of b for
/// all generator pairs.  Failure certifies the sampled set cannot be cut
/// out this way by a bracket-closed ideal; success certifies nothing.
ClosureReport poisson_closure_test(const FunctionIdeal& ideal, const KahlerStructure& ks,
                                   double tol);

// ---- Flow embeddings ------------------------------------------------------

/// psi(a) = phi_{sum_i a_i F_i}^1(x).
Vec embedding_map(const Vec& x, const std::vector<SpaceField>& fields, const Vec& a,
                  double flow_step = 1e-3);

struct EmbeddingRank {
  Mat jacobian;  // D psi(0), columns X_{F_i}(x) up to FD error
  std::vector<double> singular_values;
  int rank = 0;
};

/// FD Jacobian of psi at 0 and its numerical rank (singular values above
/// 1e-6 relative to the largest).
EmbeddingRank embedding_rank(const Vec& x, const std::vector<SpaceField>& fields,
                             double flow_step = 1e-3, double fd_step = 1e-4);

// ---- Derivative cascade ---------------------------------------------------

struct CascadeReport {
  std::optional<int> vanish_order;  // empty: every order through max_order vanished
  int max_order = 0;
  json to_json() const;
};

/// Smallest total order of a complex partial derivative of poly that does
/// not vanish at x (|value| > 1e-9), scanning orders 0..max_order.
CascadeReport derivative_cascade(const CPoly& poly, const Vec& x, int max_order);

}  // namespace hoferkit
