#pragma once

// Scenario runner: JSON-described experiments (flow dumps, transform
// identity suites, Poisson/Kahler checks, closure tests, derivative
// cascades, and displacement-energy upper-bound searches), each writing a
// deterministic JSON report plus CSV artifacts.

#include "hoferkit/benchmarks.hpp"
#include "hoferkit/kahler.hpp"
#include "hoferkit/optimize.hpp"
#include "hoferkit/transforms.hpp"

#include <optional>
#include <string>

namespace hoferkit {

/// Validation failure with a JSON-pointer-style path to the offending field.
struct SchemaError : std::runtime_error {
  std::string pointer;
  SchemaError(std::string ptr, const std::string& what)
      : std::runtime_error(ptr + ": " + what), pointer(std::move(ptr)) {}
};

/// Builds a cloud from its JSON spec ({"kind": "points" | "segment" |
/// "circle" | "disk" | "box_random", ...}).
PointCloud cloud_from_json(const json& j, int dim, const std::string& pointer);

/// Template for a parameterized compactly supported time-dependent field:
/// each term is amplitude * profile(t) * product(bump and coordinate
/// factors), with named box-bounded parameters standing in for amplitudes,
/// bump centers, and profile knot values.
class HamiltonianFamily {
 public:
  static HamiltonianFamily from_json(const json& j, int dim, const std::string& pointer);

  int parameter_count() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& parameter_names() const { return names_; }
  Vec lower() const;
  Vec upper() const;
  Vec init() const;
  int dim() const { return dim_; }

  TimeField instantiate(const Vec& theta) const;

 private:
  struct ScalarRef {  // literal or parameter slot
    double literal = 0.0;
    int param = -1;
    double resolve(const Vec& theta) const { return param < 0 ? literal : theta[param]; }
  };
  struct Factor {
    enum class Type { coord, bump, constant } type = Type::constant;
    int index = 0;                  // coord
    std::vector<ScalarRef> center;  // bump
    double inner_r = 1.0, outer_r = 2.0;
    double value = 1.0;  // constant
  };
  struct Term {
    ScalarRef amplitude;
    enum class ProfileKind { constant, polynomial, knots } profile_kind = ProfileKind::constant;
    double profile_value = 1.0;
    std::vector<double> profile_coeffs;
    std::vector<ScalarRef> knot_values;
    std::vector<Factor> factors;
  };

  int dim_ = 2;
  std::vector<std::string> names_;
  std::vector<double> lower_, upper_, init_;
  std::vector<Term> terms_;
};

struct DisplacementScenario {
  int dim = 2;
  PointCloud a;
  PointCloud u;
  HamiltonianFamily family;
  enum class Objective { global, restricted } objective = Objective::global;
  double margin = 0.1;
  int budget = 200;
  unsigned seed = 1;
  int restarts = 2;
  double step = 1e-3;           // candidate integration step
  double oracle_step = 5e-3;    // inner flows of transform value oracles
  double k_step = 1e-2;         // direct integration step for transformed fields
  GridSpec grid;
  int t_samples = 17;
  double penalty_weight = 1e3;
};

struct CandidateEvaluation {
  bool feasible = false;
  double objective = 0.0;  // the scenario's selected objective
  double margin = 0.0;
  double ub_global = 0.0;
  double ub_restricted = 0.0;
  std::string diagnostic;  // set when integration failed
  bool flow_failed = false;
};

CandidateEvaluation evaluate_candidate(const DisplacementScenario& scn, const Vec& theta);

struct WitnessOptions {
  double base_step = 1e-3;
  double oracle_step = 5e-3;
  double k_step = 1e-2;
  int t_samples = 17;
};

/// Direct-integration witness for the oscillation-transfer identity: the
/// conjugate-reverse field shares the time-one map of the base field while
/// its moving-cloud length equals the base field's restricted length.
struct Theorem1Witness {
  double endpoint_residual = 0.0;   // max over the cloud
  double moving_length_k = 0.0;     // Simpson of osc over the moving cloud
  double restricted_length_h = 0.0; // Simpson of osc over the fixed cloud
  double difference = 0.0;
  bool flow_failed = false;
  std::string diagnostic;
  json to_json() const;
};

Theorem1Witness witness_report(const TimeField& h, const PointCloud& a,
                               const WitnessOptions& opts = {});

struct Theorem1Options {
  WitnessOptions witness;
  int identity_points = 0;  // 0: use the whole cloud
  int remark2_points = 8;
};

struct Theorem1Check {
  std::string name;
  Theorem1Witness witness;
  double identity_residual = 0.0;  // |K(t, phi_K^t(m)) - H(1-t, m)|
  double remark2_residual = 0.0;   // |K'(t, phi_K'^t(m)) - H(1-t, phi_H^1(m))|
  double osc_slice_residual = 0.0; // per-t |osc_moving(K) - osc_restricted(H, 1-t)|
  json to_json() const;
};

Theorem1Check theorem1_check(const TimeField& h, const PointCloud& a, std::string name,
                             const Theorem1Options& opts = {});

struct ScenarioReport {
  bool feasible = false;
  Vec best_theta;
  double ub_global = 0.0;
  double ub_restricted = 0.0;
  double disjunction_margin_achieved = 0.0;
  double objective = 0.0;
  Theorem1Witness theorem1_witness;
  int evaluations = 0;
  std::string diagnostic;
  json provenance;
  json to_json() const;
};

ScenarioReport optimize_scenario(const DisplacementScenario& scn);

struct RunOverrides {
  std::optional<double> step;
  std::optional<unsigned> seed;
};

/// Executes the subcommand named in the scenario file, writing report.json
/// and CSV artifacts under out_dir.  Returns 0 on success, 2 when a
/// displacement search finished without a feasible candidate, 1 on errors.
int run_scenario_file(const std::string& path, const std::string& out_dir,
                      const RunOverrides& overrides = {});

}  // namespace hoferkit
