#include "hoferkit/field.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace hoferkit;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Seeded random expression over all primitives, for the gradient and
// support property checks.
SpaceField random_composition(std::mt19937_64& rng, int dim, bool force_compact) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::function<ExprPtr(int)> build = [&](int depth) -> ExprPtr {
    const int pick = depth <= 0 ? static_cast<int>(rng() % 3) : static_cast<int>(rng() % 8);
    switch (pick) {
      case 0:
        return expr_const(uniform(-2.0, 2.0));
      case 1:
      case 2:
        return expr_coord(static_cast<int>(rng() % dim));
      case 3:
        return expr_sum({build(depth - 1), build(depth - 1)});
      case 4:
        return expr_product({build(depth - 1), build(depth - 1)});
      case 5:
        return expr_scale(uniform(-2.0, 2.0), build(depth - 1));
      case 6: {
        std::vector<double> coeffs = {uniform(-1, 1), uniform(-1, 1), uniform(-0.5, 0.5)};
        return expr_poly1(std::move(coeffs), build(depth - 1));
      }
      default: {
        const double e0 = uniform(-1.0, 0.5);
        return expr_smoothstep(e0, e0 + uniform(0.5, 1.5), build(depth - 1));
      }
    }
  };

  ExprPtr core = build(3);
  if (force_compact) {
    std::vector<double> center(static_cast<std::size_t>(dim));
    for (double& c : center) c = uniform(-0.5, 0.5);
    const double inner = uniform(0.8, 1.5);
    core = expr_product({core, expr_bump(center, inner, inner + uniform(0.5, 1.0))});
  }
  return SpaceField(dim, core);
}

double quintic(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }

}  // namespace

TEST_CASE("coordinate and polynomial evaluation") {
  const SpaceField x = coordinate(2, 0);
  CHECK(evaluate(x, v2(3, 0)) == 3.0);

  const SpaceField y = coordinate(2, 1);
  const SpaceField saddle = x * x - y * y;
  CHECK(evaluate(saddle, v2(1, 1)) == 0.0);

  CHECK_THROWS_AS(evaluate(x, Vec::Zero(4)), std::invalid_argument);
}

TEST_CASE("analytic gradients match hand computations") {
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);

  const Vec g1 = gradient(x * y, v2(2, 3));
  CHECK(g1[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(g1[1] == doctest::Approx(2.0).epsilon(1e-14));

  CHECK(gradient(constant(2, 5.0), v2(0.3, -0.7)).norm() == 0.0);

  const SpaceField radial = 0.5 * (x * x + y * y);
  const Vec g3 = gradient(radial, v2(1, 2));
  CHECK(g3[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g3[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("bump plateau, support, and blend value") {
  const SpaceField b = make_bump(Vec::Zero(2), 1.0, 2.0);
  CHECK(evaluate(b, v2(0.5, 0)) == 1.0);
  CHECK(evaluate(b, v2(3, 0)) == 0.0);

  // midpoint of the blend: 1 - S(0.5) with S the quintic smoothstep;
  // S(0.5) = 6/32 - 15/16 + 10/8 = 0.5 by direct expansion
  const double mid = evaluate(b, v2(1.5, 0));
  CHECK(mid == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);

  CHECK(b.support_radius() == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_bump(Vec::Zero(2), 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_bump(Vec::Zero(2), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("level truncator branches and bounds") {
  const SmoothTruncator f1 = make_truncator(1);
  CHECK(f1(2.0) == 2.0);
  CHECK(f1(0.25) == 0.0);
  CHECK(f1(-2.0) == -2.0);
  CHECK(f1(-0.25) == 0.0);

  const SmoothTruncator f2 = make_truncator(2);
  const double v = f2(0.4);
  CHECK(v >= 0.0);
  CHECK(v <= 0.4);
  CHECK(std::abs(v - 0.4) <= 0.5);

  CHECK_THROWS_AS(make_truncator(0), std::invalid_argument);

  // 1e4-point grid on [-2,2]: exact branches, monotone, |f-s| <= 1/n
  for (int n : {1, 2, 5}) {
    const SmoothTruncator f = make_truncator(n);
    double prev = f(-2.0);
    bool branches_ok = true, monotone_ok = true, close_ok = true;
    for (int i = 0; i <= 10000; ++i) {
      const double s = -2.0 + 4.0 * i / 10000.0;
      const double fs = f(s);
      if (std::abs(s) >= 1.0 / n && fs != s) branches_ok = false;
      if (std::abs(s) <= 0.5 / n && fs != 0.0) branches_ok = false;
      if (std::abs(fs - s) > 1.0 / n + 1e-15) close_ok = false;
      if (fs < prev - 1e-15) monotone_ok = false;
      prev = fs;
    }
    CHECK(branches_ok);
    CHECK(monotone_ok);
    CHECK(close_ok);
  }
}

TEST_CASE("gradients agree with central differences on random compositions") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> unit(-1.5, 1.5);
  const double step = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const SpaceField f = random_composition(rng, 2, trial % 2 == 0);
    Vec m = v2(unit(rng), unit(rng));
    const Vec g = gradient(f, m);
    if (g.norm() < 1e-3) continue;
    ++checked;
    for (int d = 0; d < 2; ++d) {
      Vec hi = m, lo = m;
      hi[d] += step;
      lo[d] -= step;
      const double fd = (evaluate(f, hi) - evaluate(f, lo)) / (2.0 * step);
      CHECK(std::abs(fd - g[d]) <= 1e-5 * std::max(1e-3, g.norm()));
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("compact support evaluates to exactly zero outside the radius") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> extra(0.001, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    const SpaceField f = random_composition(rng, 2, true);
    REQUIRE(std::isfinite(f.support_radius()));
    bool all_zero = true;
    for (int i = 0; i < 100; ++i) {
      const double r = f.support_radius() + extra(rng);
      const double phi = angle(rng);
      if (evaluate(f, v2(r * std::cos(phi), r * std::sin(phi))) != 0.0) all_zero = false;
    }
    CHECK(all_zero);
  }
}

TEST_CASE("time profiles: knots, polynomials, and affine substitutions") {
  const std::vector<double> values = {0.0, 1.0, 0.5, 0.25};
  const TimeProfile p = TimeProfile::smooth_knots(values);
  for (std::size_t i = 0; i < values.size(); ++i)
    CHECK(p(static_cast<double>(i) / 3.0) == doctest::Approx(values[i]).epsilon(1e-12));

  const TimeProfile linear = TimeProfile::polynomial({0.0, 1.0});
  CHECK(linear(0.3) == doctest::Approx(0.3));

  const TimeProfile rev = linear.reversed();
  CHECK(rev(0.3) == doctest::Approx(0.7).epsilon(1e-14));
  const TimeProfile rep = p.reparam(0.5);
  for (double t : {0.0, 0.31, 0.77, 1.0})
    CHECK(rep(t) == doctest::Approx(0.5 * p(0.5 * t)).epsilon(1e-12));
  const TimeProfile z = p.reparam(0.0);
  CHECK(z(0.5) == 0.0);
}

TEST_CASE("time fields slice to space fields and validate arguments") {
  const SpaceField bump = make_bump(Vec::Zero(2), 1.0, 2.0);
  const TimeField h({TimeField::Term{TimeProfile::polynomial({0.0, 1.0}),
                                     coordinate(2, 1) * bump}});
  const Vec m = v2(0.3, 0.4);
  CHECK(evaluate(h, 0.5, m) == doctest::Approx(0.5 * 0.4).epsilon(1e-14));
  const SpaceField slice = h.at_time(0.5);
  CHECK(evaluate(slice, m) == doctest::Approx(evaluate(h, 0.5, m)).epsilon(1e-14));

  // slice gradients match the time-field gradient
  const Vec g = gradient(h, 0.5, m);
  const Vec gs = gradient(slice, m);
  CHECK((g - gs).norm() <= 1e-14);

  CHECK_THROWS_AS(evaluate(h, 1.5, m), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(h, -0.5, m), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(h, 0.5, Vec::Zero(4)), std::invalid_argument);
}

TEST_CASE("serialization round-trips are byte-identical") {
  std::mt19937_64 rng(5);
  const SpaceField f = random_composition(rng, 2, true);
  const std::string once = f.to_json().dump();
  const SpaceField parsed = SpaceField::from_json(json::parse(once));
  CHECK(parsed.to_json().dump() == once);

  // values survive the round trip exactly
  const Vec m = v2(0.37, -0.21);
  CHECK(parsed.value(m) == f.value(m));

  const TimeField h({TimeField::Term{TimeProfile::smooth_knots({0.2, 0.9, 0.4}), f},
                     TimeField::Term{TimeProfile::polynomial({1.0, -0.5}), coordinate(2, 0)}});
  const std::string htext = h.to_json().dump();
  CHECK(TimeField::from_json(json::parse(htext)).to_json().dump() == htext);
}

TEST_CASE("symbolic partials cover the polynomial subset") {
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);
  const SpaceField f = x * x * y + 2.0 * y;

  const SpaceField fx = partial_derivative(f, 0);
  const SpaceField fy = partial_derivative(f, 1);
  const Vec m = v2(1.5, -2.0);
  CHECK(evaluate(fx, m) == doctest::Approx(2.0 * 1.5 * -2.0).epsilon(1e-14));
  CHECK(evaluate(fy, m) == doctest::Approx(1.5 * 1.5 + 2.0).epsilon(1e-14));

  const SpaceField composed = compose_poly({0.0, 0.0, 1.0}, x + y);  // (x+y)^2
  const Vec g = gradient(composed, m);
  const SpaceField dc = partial_derivative(composed, 0);
  CHECK(evaluate(dc, m) == doctest::Approx(g[0]).epsilon(1e-12));

  CHECK_THROWS_AS(partial_derivative(make_bump(Vec::Zero(2), 1.0, 2.0), 0), std::domain_error);
}

TEST_CASE("quintic smoothstep blend is the frozen reference polynomial") {
  for (double u : {0.1, 0.25, 0.5, 0.75, 0.9})
    CHECK(quintic_smoothstep(u) == doctest::Approx(quintic(u)).epsilon(1e-15));
  CHECK(quintic_smoothstep(-0.5) == 0.0);
  CHECK(quintic_smoothstep(1.5) == 1.0);
}
