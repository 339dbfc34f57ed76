#include "hoferkit/benchmarks.hpp"

#include <random>

namespace hoferkit {

namespace {

// Gentle compactly supported random field: 2-3 terms, each a small-amplitude
// bump times an optional linear coordinate factor.  Amplitudes and length
// scales are chosen so the benchmark tolerances (symplecticity 1e-5, energy
// conservation 1e-6 at step 1e-3) rate-limit the integrator, not the field.
BenchmarkField random_benchmark(const std::string& name, int dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int terms = 2 + static_cast<int>(rng() % 2);
  std::vector<TimeField::Term> dependent, autonomous;
  for (int k = 0; k < terms; ++k) {
    Vec center(dim);
    for (int d = 0; d < dim; ++d) center[d] = uniform(-0.7, 0.7);
    const double inner = uniform(1.0, 1.6);
    const double outer = inner + uniform(1.0, 1.4);
    SpaceField space = make_bump(center, inner, outer);
    // at least one term moves points on the plateau, not just in the collar
    if (k == 0 || unit(rng) < 0.5)
      space = coordinate(dim, static_cast<int>(rng() % dim)) * space;
    space = uniform(0.2, 0.45) * (unit(rng) < 0.5 ? -1.0 : 1.0) * space;

    std::vector<double> knots(5);
    for (double& v : knots) v = uniform(0.35, 1.0);
    dependent.push_back({TimeProfile::smooth_knots(knots), space});
    autonomous.push_back({TimeProfile::constant(1.0), space});
  }
  return BenchmarkField{name, TimeField(std::move(dependent)), TimeField(std::move(autonomous))};
}

}  // namespace

const std::vector<BenchmarkField>& benchmark_fields() {
  static const std::vector<BenchmarkField> fields = [] {
    std::vector<BenchmarkField> out;
    for (int i = 0; i < 5; ++i)
      out.push_back(random_benchmark("r2-" + std::to_string(i), 2, 1000u + static_cast<unsigned>(i)));
    for (int i = 0; i < 2; ++i)
      out.push_back(random_benchmark("r4-" + std::to_string(i), 4, 2000u + static_cast<unsigned>(i)));
    return out;
  }();
  return fields;
}

TimeField rotation_field(double inner, double outer) {
  const SpaceField x = coordinate(2, 0);
  const SpaceField y = coordinate(2, 1);
  const SpaceField quad = 0.5 * (x * x + y * y);
  return TimeField::autonomous(quad * make_bump(Vec::Zero(2), inner, outer));
}

TimeField translation_field(double amp, double inner, double outer) {
  return translation_field_profiled(TimeProfile::constant(1.0), amp, inner, outer);
}

TimeField translation_field_profiled(const TimeProfile& p, double amp, double inner,
                                     double outer) {
  const SpaceField space = amp * (coordinate(2, 1) * make_bump(Vec::Zero(2), inner, outer));
  return TimeField({TimeField::Term{p, space}});
}

PointCloud benchmark_cloud(int dim, int count, unsigned seed) {
  return random_box_cloud(Vec::Constant(dim, -0.8), Vec::Constant(dim, 0.8), count, seed,
                          "benchmark");
}

}  // namespace hoferkit
