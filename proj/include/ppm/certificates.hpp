#pragma once

#include "ppm/engine.hpp"
#include "ppm/problems.hpp"
#include "ppm/stochastic.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ppm {

constexpr double kCertTol = 1e-8;

struct CertificateReport {
  std::string name;
  std::vector<double> residuals; // LHS - RHS, positive means slack
  double min_residual = 0;
  double scale = 1;
  double tol = kCertTol;
  int worst_index = -1;
  int n_iterations = 0;

  bool pass() const { return min_residual >= -tol * scale; }
  std::string verdict() const { return pass() ? "pass" : "fail"; }
  nlohmann::json to_json() const;
};

// Fills min_residual and worst_index from residuals.
CertificateReport make_report(std::string name, std::vector<double> residuals, double scale, int n_iterations,
                              double tol = kCertTol);

// max(1, |u0 - u*|^2 * phi_max) with phi_max the largest recorded phi.
double certificate_scale(const TrajectoryLog &log, const Vec &u_star);

CertificateReport check_qf(const TrajectoryLog &log, const Vec &u_star);
enum class CiVariant { tilde, plain };
CertificateReport check_ci(const TrajectoryLog &log, const Vec &u_star, CiVariant variant = CiVariant::tilde);
// Single residual; residuals() holds the running value for every N.
CertificateReport check_di(const TrajectoryLog &log, const Vec &u_star);

// Saddle-point condition with scalar Gamma_tilde and L_i.
CertificateReport check_ci_gamma(const TrajectoryLog &log, const Vec &u_star, double gamma_tilde, double L_i);

// Relaxed duality gap at (x, y) against the problem's saddle point.
double gap(const SaddleProblem &p, const Vec &x, const Vec &y, const Vec &x_star, const Vec &y_star);
double gap(const SaddleProblem &p, const Vec &x, const Vec &y);

// Preliminary gap of step i, built from the step's subgradient selections.
double preliminary_gap(const StepPlan &plan, const Vec &u_next, const Vec &u_star);
// <H(u+), u+ - u*>_{ZW} - 1/2 |u+ - u*|^2_{Z Xi(0)}, the right-hand side of the gap identity.
double preliminary_gap_identity_rhs(const StepPlan &plan, const Vec &u_next, const Vec &u_star);

enum class ErgodicMode { shifted, plain, value };
ErgodicMode parse_ergodic_mode(const std::string &s);
struct ErgodicPoint {
  Vec x, y; // y empty for value mode
  double zeta = 0;
};
// Weighted average after N steps (N <= log.n_steps()). shifted and plain verify
// their coupling condition to 1e-12 relative and throw std::domain_error otherwise.
ErgodicPoint ergodic_point(const TrajectoryLog &log, ErgodicMode mode, int N = -1);

// G(x~_N, y~_N) for N = 1..n_steps (NaN while the weight is still zero); zetas receives zeta_N.
std::vector<double> ergodic_gaps(const TrajectoryLog &log, const SaddleProblem &p, const Vec &u_star, ErgodicMode mode,
                                 std::vector<double> *zetas = nullptr);

// Running DI with the ergodic gap: residual_N = 1/2|u0-u*|^2_{Z1M1} + sum Delta
// - 1/2|u^N-u*|^2_{Z_{N+1}M_{N+1}} - zeta_N G(x~_N, y~_N), for N >= first.
CertificateReport check_di_gap(const TrajectoryLog &log, const SaddleProblem &p, const Vec &u_star, ErgodicMode mode,
                               int stride = 1);

// residual_N = phi_0/2 |u0-u*|^2 - phi_N/2 |u^N-u*|^2 - sum_{i<N} phi_i tau_i (F(u^{i+1}) - F(u*)).
CertificateReport check_value_di(const TrajectoryLog &log, const CompositeProblem &p, const Vec &u_star);
// [G+J](u~_N) - [G+J](u*) for every N, with u~ the value-mode ergodic point.
std::vector<double> ergodic_value_gaps(const TrajectoryLog &log, const CompositeProblem &p, const Vec &u_star);

// Stochastic ergodic value gap: the ergodic numerator sum Z W u^{i+1} averaged over
// replicates, divided by the mean zeta, evaluated as [G+J] - [G+J](u*).
std::vector<double> expected_ergodic_value_gaps(const std::vector<TrajectoryLog> &logs, const CompositeProblem &p,
                                                const Vec &u_star);

// Expected descent: per N, the replicate mean of the DI residual plus three standard errors.
CertificateReport check_expected_di(const std::vector<TrajectoryLog> &logs, const Vec &u_star);
// Same for an arbitrary per-replicate residual sequence (one row per replicate).
CertificateReport expected_report(const std::string &name, const std::vector<std::vector<double>> &rows,
                                  double scale);

// Property suites.
struct ThreePointFixture {
  std::string name;
  SmoothFn J;
  double box = 1;                     // samples drawn from [-box, box]^n
  bool strongly_convex = false;       // gamma > 0 known
  bool lipschitz = true;              // global L known
  bool c2 = false;                    // delta_{z,eta} available
  // delta_{z,eta} for the ball of radius |z - x*| about x*.
  std::function<double(const Vec &x_star, const Vec &z, const Vec &eta)> delta;
};
std::vector<ThreePointFixture> three_point_fixtures();
std::vector<std::string> three_point_ids();

struct PropertyReport {
  std::string suite, fixture, inequality;
  int samples = 0;
  int violations = 0;
  double worst = 0; // largest (rhs - lhs) / scale
  bool pass() const { return violations == 0; }
  nlohmann::json to_json() const;
};

// LHS - RHS of one three-point inequality at a sample.
struct ThreePointSample {
  Vec x_star, z, x, eta;
  double tau = 1;
};
double three_point_margin(const ThreePointFixture &f, const std::string &which, const ThreePointSample &s,
                          double *scale = nullptr);
bool three_point_applicable(const ThreePointFixture &f, const std::string &which);
PropertyReport three_point_suite(const ThreePointFixture &f, const std::string &which, int n_samples,
                                 std::uint64_t seed);

struct SubspaceFixture {
  std::string name;
  SmoothFn J;
  Mat P, Pplus;
  double L = 1;
  bool expect_violation = false;
};
std::vector<SubspaceFixture> subspace_fixtures();
struct SubspaceReport {
  std::string fixture;
  std::vector<PropertyReport> items; // (i) to (v)
  bool implication_broken = false;   // an implied property failed while its premise held everywhere
  bool pass() const;
  nlohmann::json to_json() const;
};
SubspaceReport subspace_chain(const SubspaceFixture &f, int n_samples, std::uint64_t seed);

// max |E[Pi_S] - I| entry over draws (empirical mean of the weights).
PropertyReport sampler_unbiasedness(const BlockSampler &sampler, int draws, double tol = 0.05);

// Sum of the per-step QF residuals minus the DI residual.
double telescoping_gap(const TrajectoryLog &log, const Vec &u_star);

} // namespace ppm
