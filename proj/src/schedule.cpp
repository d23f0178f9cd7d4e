#include "ppm/solvers.hpp"

#include <cmath>

namespace ppm {

void ScalarSchedule::reset() {
  i = 0;
  tau = tau0;
  sigma = sigma0;
  phi = phi0;
  psi = psi0;
  omega = rule == ScheduleRule::cp_accel ? 1 / std::sqrt(1 + 2 * gamma * tau) : 1.0;
}

void ScalarSchedule::advance() {
  switch (rule) {
  case ScheduleRule::constant:
    break;
  case ScheduleRule::prox_accel: {
    double f = 1 + 2 * gamma * tau;
    phi *= f;
    tau /= std::sqrt(f);
    break;
  }
  case ScheduleRule::gd_accel:
    phi *= 1 + tau * (gamma_factor * gamma - tau * L * L);
    tau = tau_from_phi ? 1 / std::sqrt(phi) : tau0;
    break;
  case ScheduleRule::cp_accel: {
    double w = 1 / std::sqrt(1 + 2 * gamma * tau);
    phi *= 1 + 2 * gamma * tau;
    tau *= w;
    sigma /= w;
    omega = 1 / std::sqrt(1 + 2 * gamma * tau);
    break;
  }
  case ScheduleRule::geometric_tau:
    phi *= 1 + 2 * gamma * tau;
    tau *= 2;
    break;
  }
  ++i;
}

ScalarSchedule prox_schedule(double tau0, double gamma, bool accel, double phi0) {
  ScalarSchedule s;
  s.rule = accel ? ScheduleRule::prox_accel : ScheduleRule::constant;
  s.tau0 = tau0;
  s.gamma = gamma;
  s.phi0 = accel ? 1 / (tau0 * tau0) : phi0;
  s.reset();
  return s;
}

ScalarSchedule cp_schedule(double tau0, double sigma0, double gamma) {
  ScalarSchedule s;
  s.rule = ScheduleRule::cp_accel;
  s.tau0 = tau0;
  s.sigma0 = sigma0;
  s.gamma = gamma;
  s.phi0 = 1 / (tau0 * tau0);
  s.psi0 = 1 / (tau0 * sigma0);
  s.reset();
  return s;
}

} // namespace ppm
