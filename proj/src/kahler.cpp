#include "hoferkit/kahler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace hoferkit {

KahlerStructure::KahlerStructure(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("Kahler structure needs n >= 1");
  const int d = 2 * n;
  j0_ = j0_matrix(d);
  // omega(v,w) = v^T Omega w with Omega = -J0; lowering with omega gives
  // theta_omega = Omega^T = J0, and theta_g = -theta_omega * J0.
  theta_omega_ = j0_;
  theta_g_ = -theta_omega_ * j0_;
  theta_omega_inv_ = theta_omega_.inverse();
  g_star_ = theta_g_.inverse();
}

double KahlerStructure::omega(const Vec& v, const Vec& w) const {
  return (theta_omega_ * v).dot(w);
}

double KahlerStructure::metric(const Vec& v, const Vec& w) const {
  return (theta_g_ * v).dot(w);
}

double KahlerStructure::dual_metric(const Vec& alpha, const Vec& beta) const {
  return alpha.dot(g_star_ * beta);
}

Vec KahlerStructure::hamiltonian_field(const Vec& grad) const {
  return -(theta_omega_inv_ * grad);
}

double poisson_bracket(const SpaceField& f, const SpaceField& g, const KahlerStructure& ks,
                       const Vec& m) {
  if (f.dim() != ks.dim() || g.dim() != ks.dim())
    throw std::invalid_argument("field dimensions do not match the structure");
  const Vec xf = ks.hamiltonian_field(gradient(f, m));
  const Vec xg = ks.hamiltonian_field(gradient(g, m));
  return ks.omega(xf, xg);
}

SpaceField poisson_bracket_field(const SpaceField& f, const SpaceField& g) {
  if (f.dim() != g.dim()) throw std::invalid_argument("field dimensions do not match");
  const int n = f.dim() / 2;
  // {F,G} = sum_i dF/dx_i dG/dy_i - dF/dy_i dG/dx_i
  std::vector<ExprPtr> terms;
  for (int i = 0; i < n; ++i) {
    const SpaceField fx = partial_derivative(f, i);
    const SpaceField fy = partial_derivative(f, n + i);
    const SpaceField gx = partial_derivative(g, i);
    const SpaceField gy = partial_derivative(g, n + i);
    terms.push_back(expr_product({fx.expr(), gy.expr()}));
    terms.push_back(expr_scale(-1.0, expr_product({fy.expr(), gx.expr()})));
  }
  return SpaceField(f.dim(), expr_sum(std::move(terms)));
}

// ---- Complex polynomials -------------------------------------------------

CPoly::CPoly(int nvars) : nvars_(nvars) {
  if (nvars < 1) throw std::invalid_argument("polynomial needs at least one variable");
}

CPoly::CPoly(int nvars, std::map<Exponents, Complex> coeffs)
    : nvars_(nvars), coeffs_(std::move(coeffs)) {
  for (const auto& [exps, c] : coeffs_)
    if (static_cast<int>(exps.size()) != nvars)
      throw std::invalid_argument("exponent tuple length does not match nvars");
}

bool CPoly::is_zero(double tol) const {
  for (const auto& [exps, c] : coeffs_)
    if (std::abs(c) > tol) return false;
  return true;
}

CPoly& CPoly::add_term(Exponents exps, Complex coeff) {
  if (static_cast<int>(exps.size()) != nvars_)
    throw std::invalid_argument("exponent tuple length does not match nvars");
  coeffs_[std::move(exps)] += coeff;
  return *this;
}

Complex CPoly::eval(const std::vector<Complex>& z) const {
  if (static_cast<int>(z.size()) != nvars_)
    throw std::invalid_argument("point dimension does not match polynomial");
  Complex acc = 0.0;
  for (const auto& [exps, c] : coeffs_) {
    Complex term = c;
    for (int v = 0; v < nvars_; ++v)
      for (int e = 0; e < exps[v]; ++e) term *= z[static_cast<std::size_t>(v)];
    acc += term;
  }
  return acc;
}

CPoly CPoly::partial(int var) const {
  if (var < 0 || var >= nvars_) throw std::invalid_argument("variable index out of range");
  CPoly d(nvars_);
  for (const auto& [exps, c] : coeffs_) {
    if (exps[var] == 0) continue;
    Exponents e = exps;
    const double k = static_cast<double>(e[var]);
    e[var] -= 1;
    d.add_term(std::move(e), c * k);
  }
  return d;
}

json CPoly::to_json() const {
  json j;
  j["nvars"] = nvars_;
  json terms = json::array();
  for (const auto& [exps, c] : coeffs_) {
    json t;
    t["exponents"] = exps;
    t["re"] = c.real();
    t["im"] = c.imag();
    terms.push_back(std::move(t));
  }
  j["terms"] = std::move(terms);
  return j;
}

CPoly CPoly::from_json(const json& j) {
  CPoly p(j.at("nvars").get<int>());
  for (const auto& t : j.at("terms"))
    p.add_term(t.at("exponents").get<std::vector<int>>(),
               Complex(t.at("re").get<double>(), t.value("im", 0.0)));
  return p;
}

CPoly random_cpoly(int nvars, int degree, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(0, degree);
  CPoly p(nvars);
  const int terms = 3 + static_cast<int>(rng() % 4);
  for (int k = 0; k < terms; ++k) {
    CPoly::Exponents e(static_cast<std::size_t>(nvars), 0);
    int budget = degree;
    for (int v = 0; v < nvars; ++v) {
      const int g = std::min(budget, expo(rng));
      e[static_cast<std::size_t>(v)] = g;
      budget -= g;
    }
    p.add_term(std::move(e), Complex(coeff(rng), coeff(rng)));
  }
  return p;
}

std::vector<Complex> point_to_complex(const Vec& m) {
  const int n = static_cast<int>(m.size()) / 2;
  std::vector<Complex> z(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) z[static_cast<std::size_t>(j)] = Complex(m[j], m[n + j]);
  return z;
}

namespace {

// Real-variable expansion of a complex polynomial: multi-indexed by
// exponents over (x_1..x_n, y_1..y_n) with complex coefficients.
using RealExpansion = std::map<std::vector<int>, Complex>;

RealExpansion expand(const CPoly& p) {
  const int n = p.nvars();
  RealExpansion acc;
  for (const auto& [exps, c] : p.coeffs()) {
    RealExpansion term;
    term[std::vector<int>(static_cast<std::size_t>(2 * n), 0)] = c;
    for (int v = 0; v < n; ++v) {
      for (int e = 0; e < exps[static_cast<std::size_t>(v)]; ++e) {
        // multiply by (x_v + i y_v)
        RealExpansion next;
        for (const auto& [re_exps, rc] : term) {
          auto ex = re_exps;
          ex[static_cast<std::size_t>(v)] += 1;
          next[ex] += rc;
          auto ey = re_exps;
          ey[static_cast<std::size_t>(n + v)] += 1;
          next[ey] += rc * Complex(0.0, 1.0);
        }
        term = std::move(next);
      }
    }
    for (const auto& [re_exps, rc] : term) acc[re_exps] += rc;
  }
  return acc;
}

ExprPtr monomial_expr(const std::vector<int>& exps, double coeff) {
  std::vector<ExprPtr> factors;
  for (std::size_t v = 0; v < exps.size(); ++v)
    for (int e = 0; e < exps[v]; ++e) factors.push_back(expr_coord(static_cast<int>(v)));
  if (factors.empty()) return expr_const(coeff);
  return expr_scale(coeff, expr_product(std::move(factors)));
}

SpaceField expansion_part(const RealExpansion& expansion, int dim, bool imaginary) {
  std::vector<ExprPtr> terms;
  for (const auto& [exps, c] : expansion) {
    const double coeff = imaginary ? c.imag() : c.real();
    if (coeff != 0.0) terms.push_back(monomial_expr(exps, coeff));
  }
  if (terms.empty()) terms.push_back(expr_const(0.0));
  return SpaceField(dim, expr_sum(std::move(terms)));
}

}  // namespace

HolomorphicSample make_holomorphic_sample(const CPoly& poly, double cr_tol) {
  const int dim = 2 * poly.nvars();
  const RealExpansion expansion = expand(poly);
  HolomorphicSample h{poly, expansion_part(expansion, dim, false),
                      expansion_part(expansion, dim, true)};
  const KahlerStructure ks(poly.nvars());
  const PointCloud probes = random_box_cloud(Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0),
                                             100, 20240u + static_cast<unsigned>(dim));
  const double res = cauchy_riemann_residual(h, ks, probes);
  if (res > cr_tol) {
    std::ostringstream msg;
    msg << "Cauchy-Riemann residual " << res << " exceeds " << cr_tol
        << "; the expansion is not holomorphic";
    throw std::invalid_argument(msg.str());
  }
  return h;
}

double cauchy_riemann_residual(const HolomorphicSample& h, const KahlerStructure& ks,
                               const PointCloud& points) {
  double worst = 0.0;
  for (int i = 0; i < points.size(); ++i) {
    const Vec m = points.point(i);
    const Vec du = gradient(h.u, m);
    const Vec dv = gradient(h.v, m);
    // dv o J as a component vector is J^T dv = -J dv
    const Vec lhs = -(ks.j0() * dv);
    worst = std::max(worst, (lhs - du).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

json HolPoisReport::to_json() const {
  json j;
  j["max_bracket_vs_du"] = max_bracket_vs_du;
  j["max_du_vs_dv"] = max_du_vs_dv;
  j["max_cauchy_riemann"] = max_cr;
  return j;
}

HolPoisReport holpois_check(const HolomorphicSample& h, const KahlerStructure& ks,
                            const PointCloud& points) {
  HolPoisReport rep;
  for (int i = 0; i < points.size(); ++i) {
    const Vec m = points.point(i);
    const Vec du = gradient(h.u, m);
    const Vec dv = gradient(h.v, m);
    const double bracket = ks.omega(ks.hamiltonian_field(du), ks.hamiltonian_field(dv));
    const double gdu = ks.dual_metric(du, du);
    const double gdv = ks.dual_metric(dv, dv);
    rep.max_bracket_vs_du = std::max(rep.max_bracket_vs_du, std::abs(bracket - gdu));
    rep.max_du_vs_dv = std::max(rep.max_du_vs_dv, std::abs(gdu - gdv));
    const Vec cr = -(ks.j0() * dv) - du;
    rep.max_cr = std::max(rep.max_cr, cr.lpNorm<Eigen::Infinity>());
  }
  return rep;
}

FunctionIdeal make_function_ideal(PointCloud b, std::vector<SpaceField> generators,
                                  double vanish_tol) {
  if (generators.empty()) throw std::invalid_argument("ideal needs at least one generator");
  for (std::size_t g = 0; g < generators.size(); ++g) {
    if (generators[g].dim() != b.dim())
      throw std::invalid_argument("generator dimension does not match the cloud");
    for (int i = 0; i < b.size(); ++i) {
      const double v = generators[g].value(b.point(i));
      if (std::abs(v) > vanish_tol) {
        std::ostringstream msg;
        msg << "generator " << g << " does not vanish on the cloud: value " << v << " at point "
            << i;
        throw std::invalid_argument(msg.str());
      }
    }
  }
  return FunctionIdeal{std::move(b), std::move(generators)};
}

ClosureReport poisson_closure_test(const FunctionIdeal& ideal, const KahlerStructure& ks,
                                   double tol) {
  ClosureReport rep;
  rep.tol = tol;
  const int g = static_cast<int>(ideal.generators.size());
  for (int i = 0; i < g; ++i) {
    for (int j = i + 1; j < g; ++j) {
      for (int p = 0; p < ideal.b.size(); ++p) {
        const double v =
            poisson_bracket(ideal.generators[i], ideal.generators[j], ks, ideal.b.point(p));
        if (std::abs(v) > tol) {
          rep.closed = false;
          rep.witnesses.push_back(ClosureWitness{i, j, p, v});
        }
      }
    }
  }
  return rep;
}

json ClosureReport::to_json(const FunctionIdeal& ideal) const {
  json j;
  j["closed"] = closed;
  j["tol"] = tol;
  json ws = json::array();
  for (const auto& w : witnesses) {
    json wj;
    wj["i"] = w.i;
    wj["j"] = w.j;
    const Vec p = ideal.b.point(w.point_index);
    wj["point"] = std::vector<double>(p.data(), p.data() + p.size());
    wj["value"] = w.value;
    ws.push_back(std::move(wj));
  }
  j["witnesses"] = std::move(ws);
  return j;
}

Vec embedding_map(const Vec& x, const std::vector<SpaceField>& fields, const Vec& a,
                  double flow_step) {
  if (fields.empty()) throw std::invalid_argument("embedding needs at least one field");
  if (a.size() != static_cast<int>(fields.size()))
    throw std::invalid_argument("coefficient count does not match field count");
  if (static_cast<int>(fields.size()) > static_cast<int>(x.size()))
    throw std::invalid_argument("more fields than ambient dimensions");
  std::vector<ExprPtr> terms;
  for (std::size_t i = 0; i < fields.size(); ++i)
    terms.push_back(expr_scale(a[static_cast<int>(i)], fields[i].expr()));
  const SpaceField combined(static_cast<int>(x.size()), expr_sum(std::move(terms)));
  FlowMap fm(TimeField::autonomous(combined), flow_step);
  return fm.flow_point(x, 1.0);
}

EmbeddingRank embedding_rank(const Vec& x, const std::vector<SpaceField>& fields,
                             double flow_step, double fd_step) {
  const int k = static_cast<int>(fields.size());
  EmbeddingRank result;
  result.jacobian = Mat(x.size(), k);
  for (int j = 0; j < k; ++j) {
    Vec plus = Vec::Zero(k), minus = Vec::Zero(k);
    plus[j] = fd_step;
    minus[j] = -fd_step;
    result.jacobian.col(j) =
        (embedding_map(x, fields, plus, flow_step) - embedding_map(x, fields, minus, flow_step)) /
        (2.0 * fd_step);
  }
  Eigen::JacobiSVD<Mat> svd(result.jacobian);
  const auto& sv = svd.singularValues();
  result.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double cutoff = sv.size() > 0 ? 1e-6 * sv[0] : 0.0;
  result.rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff && sv[i] > 0.0) ++result.rank;
  return result;
}

json CascadeReport::to_json() const {
  json j;
  if (vanish_order)
    j["order"] = *vanish_order;
  else
    j["order"] = ">= " + std::to_string(max_order);
  j["tested_orders"] = max_order;
  return j;
}

CascadeReport derivative_cascade(const CPoly& poly, const Vec& x, int max_order) {
  if (max_order < 1) throw std::invalid_argument("max_order must be >= 1");
  if (x.size() != 2 * poly.nvars())
    throw std::invalid_argument("point dimension does not match polynomial");
  const std::vector<Complex> z = point_to_complex(x);
  const int n = poly.nvars();

  // breadth-first over total order; order k derivatives derived from k-1
  std::map<CPoly::Exponents, CPoly> level;
  level.emplace(CPoly::Exponents(static_cast<std::size_t>(n), 0), poly);
  for (int order = 0; order <= max_order; ++order) {
    for (const auto& [alpha, d] : level)
      if (std::abs(d.eval(z)) > 1e-9) return CascadeReport{order, max_order};
    if (order == max_order) break;
    std::map<CPoly::Exponents, CPoly> next;
    for (const auto& [alpha, d] : level) {
      for (int v = 0; v < n; ++v) {
        auto beta = alpha;
        beta[static_cast<std::size_t>(v)] += 1;
        if (!next.count(beta)) next.emplace(beta, d.partial(v));
      }
    }
    level = std::move(next);
  }
  return CascadeReport{std::nullopt, max_order};
}

}  // namespace hoferkit
