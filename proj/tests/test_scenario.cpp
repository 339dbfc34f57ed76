#include "hoferkit/scenario.hpp"

#include "hoferkit/benchmarks.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hoferkit;

namespace {

namespace fs = std::filesystem;

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("hoferkit_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

json translation_family_json(double lo = -4.0, double hi = 4.0) {
  return json::parse(R"({
    "parameters": [{"name": "amp", "lower": )" + std::to_string(lo) + R"(, "upper": )" +
                     std::to_string(hi) + R"(, "init": 0.5}],
    "terms": [{
      "amplitude": {"param": "amp"},
      "profile": {"kind": "constant", "value": 1.0},
      "space": {"factors": [
        {"type": "coord", "index": 1},
        {"type": "bump", "center": [0.5, 0.0], "inner_r": 3.0, "outer_r": 5.0}
      ]}
    }]
  })");
}

DisplacementScenario segment_scenario(DisplacementScenario::Objective mode, const Vec& u_shift) {
  DisplacementScenario scn;
  scn.dim = 2;
  scn.a = segment_cloud(v2(0, 0), v2(1, 0), 21, "A");
  scn.u = segment_cloud(v2(0, 0) + u_shift, v2(1, 0) + u_shift, 21, "U");
  scn.family = HamiltonianFamily::from_json(translation_family_json(), 2, "/family");
  scn.objective = mode;
  scn.margin = 0.2;
  scn.budget = 60;
  scn.seed = 7;
  scn.restarts = 1;
  scn.grid.lo = Vec::Constant(2, -6.0);
  scn.grid.hi = Vec::Constant(2, 6.0);
  scn.grid.per_axis = 31;
  scn.t_samples = 9;
  return scn;
}

}  // namespace

TEST_CASE("family parsing: parameters, bounds, instantiation") {
  const HamiltonianFamily fam =
      HamiltonianFamily::from_json(translation_family_json(-2, 2), 2, "/family");
  CHECK(fam.parameter_count() == 1);
  CHECK(fam.lower()[0] == -2.0);
  CHECK(fam.upper()[0] == 2.0);

  Vec theta(1);
  theta << 1.5;
  const TimeField h = fam.instantiate(theta);
  CHECK(h.dim() == 2);
  CHECK(std::isfinite(h.support_radius()));
  // amp * y on the plateau
  CHECK(h.value_at(0.3, v2(0.2, 0.4)) == doctest::Approx(1.5 * 0.4).epsilon(1e-14));
}

TEST_CASE("family parsing rejects bad specs with JSON pointers") {
  json missing_bump = translation_family_json();
  missing_bump["terms"][0]["space"]["factors"].erase(1);
  try {
    HamiltonianFamily::from_json(missing_bump, 2, "/family");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.pointer == "/family/terms/0/space/factors");
  }

  json unknown_param = translation_family_json();
  unknown_param["terms"][0]["amplitude"] = json{{"param", "nope"}};
  try {
    HamiltonianFamily::from_json(unknown_param, 2, "/family");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.pointer == "/family/terms/0/amplitude/param");
  }
}

TEST_CASE("candidate evaluation: infeasible zero field, feasible translation") {
  const DisplacementScenario scn =
      segment_scenario(DisplacementScenario::Objective::restricted, Vec::Zero(2));

  Vec zero(1);
  zero << 0.0;
  const CandidateEvaluation at_zero = evaluate_candidate(scn, zero);
  CHECK_FALSE(at_zero.feasible);
  CHECK(at_zero.margin == 0.0);

  Vec push(1);
  push << 2.0;
  const CandidateEvaluation moved = evaluate_candidate(scn, push);
  CHECK(moved.feasible);
  CHECK(moved.margin == doctest::Approx(1.0).epsilon(1e-6));

  // independent quadrature oracle for the restricted objective
  const TimeField h = scn.family.instantiate(push);
  std::vector<double> osc(static_cast<std::size_t>(scn.t_samples));
  for (int j = 0; j < scn.t_samples; ++j) {
    const double t = static_cast<double>(j) / (scn.t_samples - 1);
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < scn.a.size(); ++i) {
      const double v = h.value_at(t, scn.a.point(i));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    osc[static_cast<std::size_t>(j)] = hi - lo;
  }
  const double oracle = composite_simpson(osc, 0.0, 1.0);
  CHECK(moved.ub_restricted == doctest::Approx(oracle).epsilon(1e-12));

  // domination at the sampling level
  CHECK(moved.ub_restricted <= moved.ub_global + 1e-9);

  Vec outside(1);
  outside << 99.0;
  CHECK_THROWS_AS(evaluate_candidate(scn, outside), std::invalid_argument);
}

TEST_CASE("optimizer finds a feasible translation and stays reproducible") {
  const DisplacementScenario scn =
      segment_scenario(DisplacementScenario::Objective::global, Vec::Zero(2));
  const ScenarioReport report = optimize_scenario(scn);
  CHECK(report.feasible);
  CHECK(report.disjunction_margin_achieved >= scn.margin);
  CHECK(report.ub_restricted <= report.ub_global + 1e-9);

  // the family contains the amp=2 candidate, so the bound cannot be worse
  Vec push(1);
  push << 2.0;
  const CandidateEvaluation hand = evaluate_candidate(scn, push);
  CHECK(report.objective <= hand.objective + 1e-9);

  // pure re-evaluation reproduces the reported numbers
  const CandidateEvaluation again = evaluate_candidate(scn, report.best_theta);
  CHECK(again.margin == doctest::Approx(report.disjunction_margin_achieved).epsilon(1e-12));
  CHECK(again.ub_global == doctest::Approx(report.ub_global).epsilon(1e-12));

  // byte-identical rerun
  const ScenarioReport rerun = optimize_scenario(scn);
  CHECK(rerun.to_json().dump() == report.to_json().dump());

  // moving the target far away cannot worsen the bound for this family
  const DisplacementScenario easier =
      segment_scenario(DisplacementScenario::Objective::global, v2(10.0, 0.0));
  const ScenarioReport far_report = optimize_scenario(easier);
  CHECK(far_report.feasible);
  CHECK(far_report.ub_global <= report.ub_global + 1e-9);
}

TEST_CASE("witness report: autonomous, zero, and benchmark fields") {
  const PointCloud cloud = benchmark_cloud(2, 16, 7);

  Theorem1Witness autonomous = witness_report(rotation_field(), cloud);
  CHECK_FALSE(autonomous.flow_failed);
  CHECK(autonomous.difference <= 1e-6);

  Theorem1Witness zero = witness_report(TimeField::zero(2), cloud);
  CHECK(zero.moving_length_k == 0.0);
  CHECK(zero.restricted_length_h == 0.0);
  CHECK(zero.endpoint_residual == 0.0);

  Theorem1Witness bench = witness_report(benchmark_fields()[0].field, cloud);
  CHECK_FALSE(bench.flow_failed);
  CHECK(bench.difference <= 1e-3);
  CHECK(bench.endpoint_residual <= 1e-4);
}

TEST_CASE("flow scenario writes trajectories with the closed-form endpoint") {
  const fs::path dir = fresh_dir("flow_scn");
  json scn;
  scn["schema_version"] = 1;
  scn["command"] = "flow";
  scn["field"] = rotation_field().to_json();
  scn["step"] = 1e-3;
  scn["seeds"] = json::array({json::array({1.0, 0.0})});
  scn["t"] = 1.0;
  spit(dir / "scn.json", scn.dump(2));

  const int code = run_scenario_file((dir / "scn.json").string(), (dir / "out").string());
  CHECK(code == 0);
  CHECK(fs::exists(dir / "out" / "trajectory_0.csv"));

  const json report = json::parse(slurp(dir / "out" / "report.json"));
  const auto endpoint = report.at("endpoints").at(0);
  CHECK(std::abs(endpoint.at(0).get<double>() - std::cos(1.0)) <= 1e-6);
  CHECK(std::abs(endpoint.at(1).get<double>() - std::sin(1.0)) <= 1e-6);
  fs::remove_all(dir);
}

TEST_CASE("malformed scenarios exit with code 1 and a pointer") {
  const fs::path dir = fresh_dir("bad_scn");
  spit(dir / "broken.json", "{ not json");
  CHECK(run_scenario_file((dir / "broken.json").string(), (dir / "out").string()) == 1);

  spit(dir / "missing.json", R"({"schema_version": 1, "command": "cascade"})");
  CHECK(run_scenario_file((dir / "missing.json").string(), (dir / "out").string()) == 1);

  spit(dir / "version.json", R"({"schema_version": 2, "command": "cascade"})");
  CHECK(run_scenario_file((dir / "version.json").string(), (dir / "out").string()) == 1);

  CHECK(run_scenario_file((dir / "does_not_exist.json").string(), (dir / "out").string()) == 1);
  fs::remove_all(dir);
}

TEST_CASE("cascade, closure, and poisson scenarios produce reports") {
  const fs::path dir = fresh_dir("cmd_scn");

  json cascade;
  cascade["schema_version"] = 1;
  cascade["command"] = "cascade";
  cascade["polynomial"] = json::parse(R"({"nvars":1,"terms":[{"exponents":[2],"re":1.0,"im":0.0}]})");
  cascade["point"] = json::array({0.0, 0.0});
  cascade["max_order"] = 5;
  spit(dir / "cascade.json", cascade.dump());
  CHECK(run_scenario_file((dir / "cascade.json").string(), (dir / "c_out").string()) == 0);
  CHECK(json::parse(slurp(dir / "c_out" / "report.json")).at("result").at("order") == 2);

  json closure;
  closure["schema_version"] = 1;
  closure["command"] = "closure-test";
  closure["cloud"] = json::parse(R"({"kind":"segment","from":[-1,0],"to":[1,0],"count":11})");
  closure["generators"] = json::array({coordinate(2, 1).to_json()});
  spit(dir / "closure.json", closure.dump());
  CHECK(run_scenario_file((dir / "closure.json").string(), (dir / "l_out").string()) == 0);
  CHECK(json::parse(slurp(dir / "l_out" / "report.json")).at("result").at("closed") == true);

  json poisson;
  poisson["schema_version"] = 1;
  poisson["command"] = "poisson-check";
  poisson["random"] = json{{"count", 3}, {"degree", 3}, {"nvars", 2}, {"seed", 5}};
  poisson["points"] = json{{"count", 50}, {"box", 1.0}, {"seed", 11}};
  spit(dir / "poisson.json", poisson.dump());
  CHECK(run_scenario_file((dir / "poisson.json").string(), (dir / "p_out").string()) == 0);
  CHECK(json::parse(slurp(dir / "p_out" / "report.json")).at("all_pass") == true);

  fs::remove_all(dir);
}

TEST_CASE("shipped displacement scenario runs end to end through the CLI") {
  const fs::path scenario = fs::path(HOFERKIT_SCENARIO_DIR) / "segment_self.json";
  REQUIRE(fs::exists(scenario));
  const fs::path dir = fresh_dir("cli_run");

  // wrong subcommand for the file: the CLI refuses
  {
    std::ostringstream cmd;
    cmd << HOFERKIT_CLI_PATH << " cascade --scenario " << scenario << " --out " << (dir / "w")
        << " 2>/dev/null";
    const int status = std::system(cmd.str().c_str());
    CHECK(WEXITSTATUS(status) == 1);
  }

  // trimmed budget keeps the end-to-end run quick
  json scn = json::parse(slurp(scenario));
  scn["optimizer"]["budget"] = 40;
  scn["grid"]["per_axis"] = 21;
  spit(dir / "scn.json", scn.dump(2));
  {
    std::ostringstream cmd;
    cmd << HOFERKIT_CLI_PATH << " displace --scenario " << (dir / "scn.json") << " --out "
        << (dir / "out") << " 2>/dev/null";
    const int status = std::system(cmd.str().c_str());
    CHECK(WEXITSTATUS(status) == 0);
  }
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report.at("feasible") == true);
  CHECK(report.at("ub_restricted").get<double>() <= report.at("ub_global").get<double>() + 1e-9);
  CHECK(fs::exists(dir / "out" / "cloud_A.csv"));
  CHECK(fs::exists(dir / "out" / "cloud_A.csv.json"));
  CHECK(fs::exists(dir / "out" / "osc_restricted.csv"));
  fs::remove_all(dir);
}

TEST_CASE("shipped scenario files parse against the schema") {
  for (const char* name : {"segment_self.json", "disk_disk.json", "circle_r4.json"}) {
    const fs::path path = fs::path(HOFERKIT_SCENARIO_DIR) / name;
    REQUIRE(fs::exists(path));
    const json j = json::parse(slurp(path));
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("command") == "displace");
    const int dim = 2 * j.at("dim_n").get<int>();
    CHECK_NOTHROW(HamiltonianFamily::from_json(j.at("family"), dim, "/family"));
    CHECK_NOTHROW(cloud_from_json(j.at("A"), dim, "/A"));
    CHECK_NOTHROW(cloud_from_json(j.at("U"), dim, "/U"));
  }
}

TEST_CASE("verify-theorem1 scenario exits zero on the benchmark suite") {
  const fs::path dir = fresh_dir("verify_scn");
  json scn;
  scn["schema_version"] = 1;
  scn["command"] = "verify-theorem1";
  scn["cloud_count"] = 8;
  scn["benchmarks"] = json::array({1});
  scn["identity_points"] = 4;
  scn["remark2_points"] = 2;
  spit(dir / "scn.json", scn.dump());
  CHECK(run_scenario_file((dir / "scn.json").string(), (dir / "out").string()) == 0);
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report.at("all_pass") == true);
  CHECK(report.at("checks").size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("displace reports infeasible searches with exit code 2") {
  const fs::path dir = fresh_dir("infeasible_scn");
  json scn = json::parse(slurp(fs::path(HOFERKIT_SCENARIO_DIR) / "segment_self.json"));
  // amplitude bounds too small to ever clear the margin
  scn["family"]["parameters"][0]["lower"] = -0.2;
  scn["family"]["parameters"][0]["upper"] = 0.2;
  scn["family"]["parameters"][0]["init"] = 0.1;
  scn["optimizer"]["budget"] = 20;
  scn["grid"]["per_axis"] = 21;
  spit(dir / "scn.json", scn.dump());
  CHECK(run_scenario_file((dir / "scn.json").string(), (dir / "out").string()) == 2);
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report.at("feasible") == false);
  CHECK(report.at("disjunction_margin_achieved").get<double>() < 0.2);
  fs::remove_all(dir);
}

TEST_CASE("budget-one searches are deterministic byte for byte") {
  DisplacementScenario scn = segment_scenario(DisplacementScenario::Objective::global, Vec::Zero(2));
  scn.budget = 1;
  const ScenarioReport a = optimize_scenario(scn);
  const ScenarioReport b = optimize_scenario(scn);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.evaluations == 1);
}
