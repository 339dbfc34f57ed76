#include "hoferkit/optimize.hpp"

#include <algorithm>
#include <random>

namespace hoferkit {

namespace {

Vec clamp_box(Vec x, const Vec& lo, const Vec& hi) {
  for (int i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& objective, const Vec& init,
                             const Vec& lower, const Vec& upper, const NelderMeadOptions& opts) {
  const int n = static_cast<int>(init.size());
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("bound dimensions do not match the parameter vector");
  for (int i = 0; i < n; ++i)
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("lower bound exceeds upper bound");
  if (opts.budget < 1) throw std::invalid_argument("budget must be >= 1");

  NelderMeadResult result;
  result.best = clamp_box(init, lower, upper);
  result.objective = objective(result.best);
  result.evaluations = 1;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  auto eval = [&](const Vec& x) {
    ++result.evaluations;
    const double f = objective(x);
    if (f < result.objective) {
      result.objective = f;
      result.best = x;
    }
    return f;
  };

  Vec start = result.best;
  for (int round = 0; round <= opts.restarts && result.evaluations < opts.budget; ++round) {
    // initial simplex around the start point
    std::vector<Vec> simplex;
    std::vector<double> f;
    simplex.push_back(start);
    f.push_back(round == 0 ? result.objective : eval(start));
    for (int i = 0; i < n && result.evaluations < opts.budget; ++i) {
      Vec v = start;
      const double span = (upper[i] - lower[i]) * opts.initial_step_fraction;
      v[i] = std::clamp(v[i] + (span > 0.0 ? span : 0.25), lower[i], upper[i]);
      if (v[i] == start[i]) v[i] = std::clamp(v[i] - (span > 0.0 ? span : 0.25), lower[i], upper[i]);
      simplex.push_back(clamp_box(v, lower, upper));
      f.push_back(eval(simplex.back()));
    }

    while (result.evaluations < opts.budget && static_cast<int>(simplex.size()) == n + 1) {
      // order ascending by objective
      std::vector<int> idx(simplex.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
      std::vector<Vec> s2;
      std::vector<double> f2;
      for (int i : idx) {
        s2.push_back(simplex[i]);
        f2.push_back(f[i]);
      }
      simplex = std::move(s2);
      f = std::move(f2);

      if (f.back() - f.front() < opts.spread_tol) break;  // collapsed

      Vec centroid = Vec::Zero(n);
      for (int i = 0; i < n; ++i) centroid += simplex[static_cast<std::size_t>(i)];
      centroid /= static_cast<double>(n);

      const Vec reflected = clamp_box(centroid + (centroid - simplex.back()), lower, upper);
      const double fr = eval(reflected);
      if (fr < f.front()) {
        const Vec expanded = clamp_box(centroid + 2.0 * (centroid - simplex.back()), lower, upper);
        const double fe = result.evaluations < opts.budget ? eval(expanded) : fr + 1.0;
        if (fe < fr) {
          simplex.back() = expanded;
          f.back() = fe;
        } else {
          simplex.back() = reflected;
          f.back() = fr;
        }
      } else if (fr < f[f.size() - 2]) {
        simplex.back() = reflected;
        f.back() = fr;
      } else {
        const Vec contracted =
            clamp_box(centroid + 0.5 * (simplex.back() - centroid), lower, upper);
        const double fc = result.evaluations < opts.budget ? eval(contracted) : fr + 1.0;
        if (fc < f.back()) {
          simplex.back() = contracted;
          f.back() = fc;
        } else {
          // shrink toward the best vertex
          for (std::size_t i = 1; i < simplex.size() && result.evaluations < opts.budget; ++i) {
            simplex[i] = clamp_box(simplex.front() + 0.5 * (simplex[i] - simplex.front()), lower,
                                   upper);
            f[i] = eval(simplex[i]);
          }
        }
      }
    }

    // seeded restart around the incumbent
    start = result.best;
    for (int i = 0; i < n; ++i) {
      const double span = (upper[i] - lower[i]) * 0.1;
      start[i] = std::clamp(start[i] + span * unit(rng), lower[i], upper[i]);
    }
    ++result.restarts_used;
  }
  result.restarts_used = std::min(result.restarts_used, opts.restarts);
  return result;
}

}  // namespace hoferkit
