#pragma once

// Derivative-free search: Nelder-Mead simplex with box clamping and seeded
// restarts.  Deterministic for a fixed seed and budget.

#include "hoferkit/types.hpp"

#include <functional>

namespace hoferkit {

struct NelderMeadOptions {
  int budget = 200;          // max objective evaluations
  int restarts = 2;          // extra seeded restarts after convergence
  unsigned seed = 1;
  double spread_tol = 1e-9;  // simplex collapse threshold (objective spread)
  double initial_step_fraction = 0.25;
};

struct NelderMeadResult {
  Vec best;
  double objective = 0.0;
  int evaluations = 0;
  int restarts_used = 0;
};

/// Minimizes objective over the box [lower, upper], starting from init
/// (clamped).  The objective is evaluated only at clamped points.
NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& objective, const Vec& init,
                             const Vec& lower, const Vec& upper, const NelderMeadOptions& opts);

}  // namespace hoferkit
