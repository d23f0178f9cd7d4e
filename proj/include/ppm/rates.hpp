#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace ppm {

constexpr double kRateFloor = 1e-13;

struct RateWindow {
  int i_min = -1; // -1: drop the first 10%
  int i_max = -1; // -1: last entry above the floor
};

struct RateFit {
  std::string model; // power, linear, superlinear-q
  double parameter = 0; // slope, ratio rho, or order q
  double intercept = 0;
  double r_squared = 0;
  int i_min = 0, i_max = 0;
  double floor = 0;
  nlohmann::json to_json() const;
};

struct RateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Resolves a window against errors[k] (k = iteration index): never past the first
// entry below floor_rel * errors[0].
RateWindow resolve_window(const std::vector<double> &errors, RateWindow w, double floor_rel = kRateFloor);

// log e_i against log i.
RateFit fit_power(const std::vector<double> &errors, RateWindow w = {}, double floor_rel = kRateFloor);
// log e_i against i; parameter = exp(slope).
RateFit fit_linear(const std::vector<double> &errors, RateWindow w = {}, double floor_rel = kRateFloor);
// log e_{i+1} against log e_i; the default window starts at 0. Needs 3 points above the floor.
RateFit fit_order(const std::vector<double> &errors, RateWindow w = {0, -1}, double floor_rel = kRateFloor);

} // namespace ppm
