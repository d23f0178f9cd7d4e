#pragma once

#include "ppm/certificates.hpp"
#include "ppm/engine.hpp"
#include "ppm/problems.hpp"
#include "ppm/rates.hpp"
#include "ppm/stochastic.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ppm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kPreconditionError = 3, kCertificateFailure = 4 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string problem;
  nlohmann::json problem_params = nlohmann::json::object();
  std::string solver;
  nlohmann::json solver_params = nlohmann::json::object();
  int N = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> certificates;
  std::string output = "out";
  std::string format = "csv";
  nlohmann::json u0;   // null: default start, number: constant fill, array: explicit
  int replicates = 1;  // stochastic solvers only
};

// Strict: unknown keys, wrong types and bad values throw ConfigError.
RunConfig parse_config(const nlohmann::json &j);
RunConfig parse_config_text(const std::string &text);
RunConfig load_config(const std::string &path);

// Canonical certificate id for an id or one of its ASCII aliases (CI-tilde, CI-Gamma, DE, DI-G).
std::string canonical_certificate(const std::string &id);

struct Experiment {
  RunConfig cfg;
  Problem problem;
  bool saddle = false;
  bool stochastic = false;
  bool value_mode = false;
  bool gap_mode = false;
  double gamma_tilde = 0, L_i = 0;
  std::function<std::unique_ptr<Solver>(std::uint64_t replicate)> make_solver;
  BlockVec u0;
  std::optional<Vec> u_star;
  std::vector<std::string> applicable; // certificate ids this run can claim
};

// Builds the problem and constructs the solver once, so precondition
// failures surface here as PreconditionError.
Experiment build(const RunConfig &cfg, bool force = false);

struct Outcome {
  std::vector<TrajectoryLog> logs; // one per replicate
  std::vector<double> err_mean;    // replicate mean of err_sq (step_sq when u* is unknown)
  std::vector<double> err_stderr;
  double seconds = 0;
};
Outcome execute(const Experiment &ex);

// ids empty: every applicable certificate.
std::vector<CertificateReport> certify(const Experiment &ex, const Outcome &out, std::vector<std::string> ids = {});

nlohmann::json summarize(const Experiment &ex, const Outcome &out);

struct Flags {
  std::string out; // overrides cfg.output when set
  std::optional<std::uint64_t> seed;
  bool strict = false;
  bool force = false;
};

int cmd_run(RunConfig cfg, const Flags &flags);
int cmd_certify(RunConfig cfg, const Flags &flags);
int cmd_propcheck(const std::string &suite, int samples, std::uint64_t seed, const std::string &fixture,
                  const std::string &out_dir);
int cmd_report(const std::vector<std::string> &paths, const std::string &out_dir);

} // namespace ppm::cli
