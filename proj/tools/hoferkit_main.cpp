// Command-line front end: every subcommand reads a JSON scenario file and
// writes a deterministic report plus CSV artifacts to the output directory.

#include "hoferkit/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct SubArgs {
  std::string scenario;
  std::string out = "out";
  double step = 0.0;
  bool has_step = false;
  unsigned seed = 0;
  bool has_seed = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hoferkit: Hamiltonian flows, transform identities, and "
               "displacement-energy upper bounds on R^2n"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"flow", "integrate a field and dump trajectories"},
      {"verify-theorem1", "run the conjugate-reverse identity suite on the benchmark fields"},
      {"poisson-check", "holomorphic bracket identities on sample polynomials"},
      {"closure-test", "Poisson-closure necessary condition for a vanishing ideal"},
      {"cascade", "first nonvanishing complex derivative order"},
      {"displace", "search a Hamiltonian family for disjoining isotopies"},
  };

  std::map<std::string, SubArgs> args;
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    auto& a = args[name];
    sub->add_option("--scenario", a.scenario, "scenario JSON file")->required();
    sub->add_option("--out", a.out, "output directory (default: out)");
    sub->add_option("--step", a.step, "override the integrator step")
        ->each([&a](const std::string&) { a.has_step = true; });
    sub->add_option("--seed", a.seed, "override the scenario seed")
        ->each([&a](const std::string&) { a.has_seed = true; });
  }

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  const SubArgs& a = args[name];

  // the scenario file must name the subcommand it was written for
  {
    std::ifstream in(a.scenario);
    if (!in) {
      std::cerr << "error: cannot open scenario file " << a.scenario << "\n";
      return 1;
    }
    try {
      const auto j = hoferkit::json::parse(in);
      const std::string file_command = j.value("command", std::string{});
      if (file_command != name) {
        std::cerr << "error: /command: scenario file is for '" << file_command
                  << "', invoked as '" << name << "'\n";
        return 1;
      }
    } catch (const hoferkit::json::parse_error& e) {
      std::cerr << "error: " << a.scenario << " is not valid JSON: " << e.what() << "\n";
      return 1;
    }
  }

  hoferkit::RunOverrides overrides;
  if (a.has_step) overrides.step = a.step;
  if (a.has_seed) overrides.seed = a.seed;
  return hoferkit::run_scenario_file(a.scenario, a.out, overrides);
}
