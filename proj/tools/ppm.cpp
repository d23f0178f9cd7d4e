#include "ppm/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  using namespace ppm::cli;
  CLI::App app{"ppm: preconditioned proximal point solvers, certificates and rate fits"};
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed = 0;
  bool strict = false, force = false;
  auto add_run_flags = [&](CLI::App *c) {
    c->add_option("--config", config, "RunConfig JSON file")->required();
    c->add_option("--out", out, "output directory (overrides the config)");
    c->add_option("--seed", seed, "seed (overrides the config)");
    c->add_flag("--strict", strict, "exit 4 when a requested certificate fails");
    c->add_flag("--force", force, "skip step-bound checks");
  };
  auto *run = app.add_subcommand("run", "run a solver and write trajectory and summary");
  add_run_flags(run);
  auto *cert = app.add_subcommand("certify", "run a solver and check its certificates");
  add_run_flags(cert);

  auto *prop = app.add_subcommand("propcheck", "run a property suite over the shipped fixtures");
  std::string suite, fixture;
  int samples = 10000;
  prop->add_option("--suite", suite, "three-point, subspace or sampler")->required();
  prop->add_option("--samples", samples, "samples (draws for the sampler suite)");
  prop->add_option("--fixture", fixture, "restrict to one fixture");
  prop->add_option("--seed", seed, "seed");
  prop->add_option("--out", out, "directory for propcheck.json");

  auto *rep = app.add_subcommand("report", "aggregate summary.json files into one table");
  std::vector<std::string> paths;
  rep->add_option("paths", paths, "summary files or directories")->required();
  rep->add_option("--out", out, "directory for report.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (*prop) return cmd_propcheck(suite, samples, seed, fixture, out);
  if (*rep) return cmd_report(paths, out);

  RunConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  Flags flags;
  flags.out = out;
  if (run->count("--seed") || cert->count("--seed")) flags.seed = seed;
  flags.strict = strict;
  flags.force = force;
  return *run ? cmd_run(cfg, flags) : cmd_certify(cfg, flags);
}
