#pragma once

// Fixed seeded benchmark fields and clouds shared by the verification
// suites: five random fields on R^2, two on R^4, plus closed-form rotation
// and translation fields whose flows are exact on their plateaus.

#include "hoferkit/field.hpp"
#include "hoferkit/pointcloud.hpp"

#include <string>
#include <vector>

namespace hoferkit {

struct BenchmarkField {
  std::string name;
  TimeField field;        // time-dependent profiles
  TimeField autonomous;   // same spatial terms, constant-1 profiles
};

/// The fixed benchmark set: indices 0..4 live on R^2, 5..6 on R^4.
const std::vector<BenchmarkField>& benchmark_fields();

/// (x^2+y^2)/2 gated by a wide plateau; on |m| <= inner the flow is the
/// rotation by angle t and the quadratic energy is conserved exactly by
/// the midpoint rule.
TimeField rotation_field(double inner = 2.0, double outer = 4.0);

/// amp * y * bump; on the plateau the flow translates by (-amp t, 0).
TimeField translation_field(double amp = 1.0, double inner = 2.5, double outer = 4.5);
/// Same with a time profile p(t) applied to the translation term.
TimeField translation_field_profiled(const TimeProfile& p, double amp = 1.0, double inner = 2.5,
                                     double outer = 4.5);

/// Seeded cloud in [-0.8, 0.8]^dim used by the identity suites.
PointCloud benchmark_cloud(int dim, int count, unsigned seed = 7u);

}  // namespace hoferkit
