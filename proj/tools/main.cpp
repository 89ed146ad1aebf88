// affinelab: command-line front end.
//
//   affinelab affine  --config run.json --out out/affine
//   affinelab fields  --config run.json
//   affinelab perturb --config radial.json --seed 7
//   affinelab verify  [--config verify.json]        (default suite: identities)
//   affinelab sweep   --config sweep.json --workers 4
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 numerical failure. AFFINELAB_WORKERS sets the sweep worker count when
// --workers is absent.
#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using affinelab::cli::Command;
using affinelab::cli::Invocation;

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 0;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Options& opt) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--out", opt.out, "output directory (overrides the configuration)");
  sub->add_option("--seed", opt.seed, "random seed (overrides the configuration)");
  if (name == "sweep") sub->add_option("--workers", opt.workers, "concurrent sweep cells")->check(CLI::PositiveNumber);
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affine expanding gas motions: trajectories, fields, perturbation runs and checks"};
  app.require_subcommand(1);
  Options opt;
  const std::pair<Command, CLI::App*> commands[] = {
      {Command::Affine, add_command(app, "affine", "integrate the affine ODE and check its invariants", opt)},
      {Command::Fields, add_command(app, "fields", "sample the Eulerian fields and their residuals", opt)},
      {Command::Perturb, add_command(app, "perturb", "run a radial or 3D perturbation experiment", opt)},
      {Command::Verify, add_command(app, "verify", "run acceptance checks", opt)},
      {Command::Sweep, add_command(app, "sweep", "run one experiment per (gamma, delta, amplitude) cell", opt)},
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : affinelab::cli::kExitConfigError;
  }

  Invocation inv;
  for (const auto& [command, sub] : commands) {
    if (!sub->parsed()) continue;
    inv.command = command;
    if (sub->count("--config")) inv.config = opt.config;
    if (sub->count("--out")) inv.out = opt.out;
    if (sub->count("--seed")) inv.seed = opt.seed;
    if (sub->get_option_no_throw("--workers") && sub->count("--workers")) inv.workers = opt.workers;
  }
  return affinelab::cli::execute(inv, std::cout);
}
