#include "hoferkit/kahler.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hoferkit;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("flat structure identities hold exactly in coordinates") {
  for (int n : {1, 2, 3}) {
    const KahlerStructure ks(n);
    CHECK((ks.theta_g() + ks.theta_omega() * ks.j0()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ks.j0() * ks.j0() + Mat::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff() == 0.0);

    // dual metric positivity on random covectors
    std::mt19937_64 rng(100u + static_cast<unsigned>(n));
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
      Vec alpha(2 * n);
      for (int d = 0; d < 2 * n; ++d) alpha[d] = unit(rng);
      const double q = ks.dual_metric(alpha, alpha);
      CHECK(q >= 0.0);
      if (alpha.norm() > 0) CHECK(q > 0.0);
    }
    CHECK(ks.dual_metric(Vec::Zero(2 * n), Vec::Zero(2 * n)) == 0.0);
  }
}

TEST_CASE("the Hamiltonian field of a gradient is J0 times it") {
  const KahlerStructure ks(2);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Vec g(4);
    for (int d = 0; d < 4; ++d) g[d] = unit(rng);
    CHECK((ks.hamiltonian_field(g) - ks.j0() * g).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("bracket values on coordinate functions") {
  const KahlerStructure ks(1);
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);

  CHECK(poisson_bracket(x, y, ks, v2(0.3, -0.8)) == 1.0);
  CHECK(poisson_bracket(x, y, ks, Vec::Zero(2)) == 1.0);

  const SpaceField f = x * x * y + y;
  CHECK(poisson_bracket(f, f, ks, v2(1.1, 0.4)) == 0.0);

  // {x^2, y} = 2x by the Leibniz rule
  for (double a : {-1.5, 0.25, 2.0})
    CHECK(poisson_bracket(x * x, y, ks, v2(a, 0.7)) == doctest::Approx(2.0 * a).epsilon(1e-14));
}

TEST_CASE("antisymmetry, Leibniz, Jacobi") {
  const KahlerStructure ks(1);
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);
  const SpaceField f = x * x + 2.0 * (x * y);
  const SpaceField g = y * y - 0.5 * x;
  const SpaceField h = x * y;

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(-1.5, 1.5);
  double worst_leibniz = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec m = v2(unit(rng), unit(rng));
    CHECK(poisson_bracket(f, g, ks, m) + poisson_bracket(g, f, ks, m) == 0.0);
    const double lhs = poisson_bracket(f * g, h, ks, m);
    const double rhs = evaluate(f, m) * poisson_bracket(g, h, ks, m) +
                       evaluate(g, m) * poisson_bracket(f, h, ks, m);
    worst_leibniz = std::max(worst_leibniz, std::abs(lhs - rhs));
  }
  CHECK(worst_leibniz <= 1e-8);

  // Jacobi with symbolic inner brackets (polynomial fields)
  double worst_jacobi = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec m = v2(unit(rng), unit(rng));
    const double cyc = poisson_bracket(f, poisson_bracket_field(g, h), ks, m) +
                       poisson_bracket(g, poisson_bracket_field(h, f), ks, m) +
                       poisson_bracket(h, poisson_bracket_field(f, g), ks, m);
    worst_jacobi = std::max(worst_jacobi, std::abs(cyc));
  }
  CHECK(worst_jacobi <= 1e-6);

  // the symbolic bracket agrees with the numeric one
  const SpaceField fg = poisson_bracket_field(f, g);
  for (int i = 0; i < 20; ++i) {
    const Vec m = v2(unit(rng), unit(rng));
    CHECK(evaluate(fg, m) == doctest::Approx(poisson_bracket(f, g, ks, m)).epsilon(1e-12));
  }
}

TEST_CASE("holomorphic samples: z, z^2, constants") {
  const KahlerStructure ks(1);
  const PointCloud pts = random_box_cloud(v2(-1, -1), v2(1, 1), 100, 19);

  // f(z) = z: u = x, v = y; {x,y} = 1 = g*(dx,dx)
  CPoly id(1);
  id.add_term({1}, 1.0);
  const HolomorphicSample sz = make_holomorphic_sample(id);
  const HolPoisReport rz = holpois_check(sz, ks, pts);
  CHECK(rz.max_bracket_vs_du == 0.0);
  CHECK(rz.max_du_vs_dv == 0.0);

  // f(z) = z^2: {u,v} = 4(x^2+y^2) by expanding u = x^2-y^2, v = 2xy
  CPoly sq(1);
  sq.add_term({2}, 1.0);
  const HolomorphicSample s2 = make_holomorphic_sample(sq);
  for (int i = 0; i < pts.size(); ++i) {
    const Vec m = pts.point(i);
    const double expected = 4.0 * (m[0] * m[0] + m[1] * m[1]);
    CHECK(poisson_bracket(s2.u, s2.v, ks, m) == doctest::Approx(expected).epsilon(1e-12));
  }
  const HolPoisReport r2 = holpois_check(s2, ks, pts);
  CHECK(r2.max_bracket_vs_du <= 1e-8);
  CHECK(r2.max_du_vs_dv <= 1e-8);

  // constants: everything vanishes
  CPoly c(1);
  c.add_term({0}, Complex(2.0, -3.0));
  const HolomorphicSample sc = make_holomorphic_sample(c);
  const HolPoisReport rc = holpois_check(sc, ks, pts);
  CHECK(rc.max_bracket_vs_du == 0.0);
  CHECK(rc.max_du_vs_dv == 0.0);
}

TEST_CASE("random holomorphic polynomials satisfy the bracket identity") {
  for (int trial = 0; trial < 10; ++trial) {
    const int nvars = 1 + trial % 3;
    const CPoly p = random_cpoly(nvars, 4, 500u + static_cast<unsigned>(trial));
    const KahlerStructure ks(nvars);
    const HolomorphicSample s = make_holomorphic_sample(p);
    const PointCloud pts = random_box_cloud(Vec::Constant(2 * nvars, -1.0),
                                            Vec::Constant(2 * nvars, 1.0), 100,
                                            600u + static_cast<unsigned>(trial));
    const HolPoisReport rep = holpois_check(s, ks, pts);
    CHECK(rep.max_bracket_vs_du <= 1e-8);
    CHECK(rep.max_du_vs_dv <= 1e-8);
    CHECK(rep.max_cr <= 1e-10);
    CHECK(cauchy_riemann_residual(s, ks, pts) <= 1e-10);
  }
}

TEST_CASE("closure test separates coisotropic samples from obstructed ones") {
  const KahlerStructure ks(1);
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);

  // the line {y=0}: generators y and y*x; {y, yx} = -y vanishes on it
  const PointCloud line = segment_cloud(v2(-1, 0), v2(1, 0), 21, "line");
  const FunctionIdeal line_ideal = make_function_ideal(line, {y, y * x});
  const ClosureReport ok = poisson_closure_test(line_ideal, ks, 1e-9);
  CHECK(ok.closed);
  CHECK(ok.witnesses.empty());

  // the origin with generators x and y: {x,y} = 1 there
  Mat origin(2, 1);
  origin.setZero();
  const FunctionIdeal bad = make_function_ideal(PointCloud(origin, "origin"), {x, y});
  const ClosureReport fail = poisson_closure_test(bad, ks, 1e-9);
  CHECK_FALSE(fail.closed);
  REQUIRE(fail.witnesses.size() == 1);
  CHECK(std::abs(fail.witnesses[0].value - 1.0) <= 1e-12);
  const json rj = fail.to_json(bad);
  CHECK(rj.at("closed") == false);
  CHECK(rj.at("witnesses").size() == 1);

  // a single generator is vacuously closed
  const FunctionIdeal solo = make_function_ideal(line, {y});
  CHECK(poisson_closure_test(solo, ks, 1e-9).closed);

  // generators must vanish on the cloud
  CHECK_THROWS_AS(make_function_ideal(line, {x}), std::invalid_argument);
}

TEST_CASE("embedding map and rank from vanishing generators") {
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);
  const SpaceField cap = make_bump(Vec::Zero(2), 0.5, 1.0);
  const Vec origin = Vec::Zero(2);

  // k = 1: psi(a) = (0, a) for small a since X_x = (0,1) near the origin
  const std::vector<SpaceField> one = {x * cap};
  Vec a1(1);
  a1 << 0.05;
  const Vec image = embedding_map(origin, one, a1);
  CHECK(image[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(image[1] == doctest::Approx(0.05).epsilon(1e-8));
  const EmbeddingRank r1 = embedding_rank(origin, one);
  CHECK(r1.rank == 1);
  CHECK((r1.jacobian.col(0) - v2(0, 1)).norm() <= 1e-4);

  // all-zero generators keep the point fixed
  const std::vector<SpaceField> zeros = {0.0 * cap};
  Vec a0(1);
  a0 << 0.3;
  CHECK((embedding_map(origin, zeros, a0) - origin).norm() == 0.0);
  CHECK(embedding_rank(origin, zeros).rank == 0);

  // k = 2: X_x = (0,1) and X_y = (-1,0) are independent
  const std::vector<SpaceField> two = {x * cap, y * cap};
  const EmbeddingRank r2 = embedding_rank(origin, two);
  CHECK(r2.rank == 2);
  CHECK((r2.jacobian.col(0) - v2(0, 1)).norm() <= 1e-4);
  CHECK((r2.jacobian.col(1) - v2(-1, 0)).norm() <= 1e-4);

  Vec a2(2);
  a2 << 0.1, 0.1;
  CHECK_THROWS_AS(embedding_map(origin, one, a2), std::invalid_argument);
}

TEST_CASE("derivative cascade orders") {
  // z^2 at 0 vanishes to order exactly 2
  CPoly sq(1);
  sq.add_term({2}, 1.0);
  const CascadeReport r1 = derivative_cascade(sq, Vec::Zero(2), 5);
  REQUIRE(r1.vanish_order.has_value());
  CHECK(*r1.vanish_order == 2);

  // z1 z2 at 0: the mixed second partial is 1
  CPoly mixed(2);
  mixed.add_term({1, 1}, 1.0);
  const CascadeReport r2 = derivative_cascade(mixed, Vec::Zero(4), 5);
  REQUIRE(r2.vanish_order.has_value());
  CHECK(*r2.vanish_order == 2);

  // the zero polynomial never stops vanishing
  const CascadeReport r3 = derivative_cascade(CPoly(1), Vec::Zero(2), 5);
  CHECK_FALSE(r3.vanish_order.has_value());
  CHECK(r3.to_json().at("order") == ">= 5");

  // nonzero value at the point reports order 0
  CPoly affine(1);
  affine.add_term({0}, 1.0);
  affine.add_term({1}, 1.0);
  const CascadeReport r4 = derivative_cascade(affine, Vec::Zero(2), 3);
  REQUIRE(r4.vanish_order.has_value());
  CHECK(*r4.vanish_order == 0);

  CHECK_THROWS_AS(derivative_cascade(sq, Vec::Zero(2), 0), std::invalid_argument);
}

TEST_CASE("complex polynomial evaluation, partials, and JSON") {
  CPoly p(2);
  p.add_term({2, 1}, Complex(1.0, -0.5));
  p.add_term({0, 0}, Complex(0.0, 2.0));
  const std::vector<Complex> z = {Complex(1.0, 1.0), Complex(0.5, -0.5)};
  const Complex expected = Complex(1.0, -0.5) * (z[0] * z[0] * z[1]) + Complex(0.0, 2.0);
  CHECK(std::abs(p.eval(z) - expected) <= 1e-14);

  const CPoly dz0 = p.partial(0);
  const Complex dexp = Complex(1.0, -0.5) * (2.0 * z[0] * z[1]);
  CHECK(std::abs(dz0.eval(z) - dexp) <= 1e-14);

  const std::string text = p.to_json().dump();
  CHECK(CPoly::from_json(json::parse(text)).to_json().dump() == text);

  // block coordinates map to z = x + iy
  const std::vector<Complex> pt = point_to_complex(Vec::Ones(4));
  CHECK(pt[0] == Complex(1.0, 1.0));
  CHECK(pt[1] == Complex(1.0, 1.0));
}
