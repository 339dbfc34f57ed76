#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace hoferkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// Applies the standard complex structure (a,b) |-> (-b,a) in block
/// coordinates m = (x_1..x_n, y_1..y_n).  out may not alias g.
inline void apply_j0(std::span<const double> g, std::span<double> out) {
  const std::size_t n = g.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = -g[n + i];
    out[n + i] = g[i];
  }
}

inline Mat j0_matrix(int two_n) {
  const int n = two_n / 2;
  Mat j = Mat::Zero(two_n, two_n);
  j.topRightCorner(n, n) = -Mat::Identity(n, n);
  j.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return j;
}

/// Static-partition parallel loop; writes must be index-addressed so the
/// result does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace hoferkit
