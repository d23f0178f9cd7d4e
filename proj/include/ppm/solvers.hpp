#pragma once

#include "ppm/engine.hpp"
#include "ppm/problems.hpp"

#include <memory>

namespace ppm {

enum class ScheduleRule { constant, prox_accel, gd_accel, cp_accel, geometric_tau };

// Scalar step/testing parameters tau_i, sigma_i, phi_i, psi, omega_i.
struct ScalarSchedule {
  ScheduleRule rule = ScheduleRule::constant;
  double tau0 = 1, sigma0 = 1, phi0 = 1, psi0 = 1;
  double gamma = 0, L = 0;
  // gd_accel only: tau_i = phi_i^{-1/2} when true, tau_i = tau0 otherwise.
  bool tau_from_phi = true;
  // gd_accel only: the curvature term, 2*gamma (default) or gamma.
  double gamma_factor = 2;

  double tau = 1, sigma = 1, phi = 1, psi = 1, omega = 1;
  int i = 0;

  void reset();
  void advance();
};

ScalarSchedule prox_schedule(double tau0, double gamma, bool accel, double phi0 = 1);
ScalarSchedule cp_schedule(double tau0, double sigma0, double gamma);

struct GradDescOptions {
  bool accel = false;
  bool value_mode = false;    // step bounds and plan for function-value estimates
  bool proof_variant = false; // accelerated phi update with gamma instead of 2*gamma
  bool tau_from_phi = true;
  bool force = false;         // skip step-bound checks (deliberately divergent runs)
  double gamma = -1;          // strong convexity used for acceleration; <0 takes J.gamma
};

std::unique_ptr<Solver> make_prox(const CompositeProblem &p, double tau0, double gamma, bool accel);
std::unique_ptr<Solver> make_prox_schedule(const CompositeProblem &p, ScalarSchedule schedule, bool value_mode = false);
std::unique_ptr<Solver> make_graddesc(const CompositeProblem &p, double tau0, GradDescOptions opt = {});
std::unique_ptr<Solver> make_fb(const CompositeProblem &p, double tau0, GradDescOptions opt = {});
std::unique_ptr<Solver> make_dr(const SplitProblem &p, double lambda);
std::unique_ptr<Solver> make_newton(const CompositeProblem &p, bool proximal);
std::unique_ptr<Solver> make_km(std::function<Vec(const Vec &)> T, double alpha, Index dim);

struct CpOptions {
  bool forward_step = false;
  bool gap_mode = false; // certify with Gamma/2 and L_i = L
};
std::unique_ptr<Solver> make_cp(const SaddleProblem &p, double tau0, double sigma0, double gamma, CpOptions opt = {});

struct GistOptions {
  bool gap_mode = false;
};
std::unique_ptr<Solver> make_gist(const SaddleProblem &p, GistOptions opt = {});

// Hessian variation bound of the Newton metric: the smallest delta with
// (1-delta) H(u) <= H(z) <= (1+delta) H(u) on the H(u*)-ball of radius |u-u*|_{H(u*)}.
// Closed form for quadratic and separable cosh; empty otherwise.
std::optional<double> newton_delta(const SmoothFn &J, const Vec &u, const Vec &u_star);

} // namespace ppm
