#include "ppm/rates.hpp"

#include <algorithm>
#include <cmath>

namespace ppm {

namespace {

struct Line {
  double slope = 0, intercept = 0, r2 = 0;
};

Line least_squares_line(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx <= 0) throw RateError("rate fit: degenerate abscissae");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  double sse = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (l.intercept + l.slope * x[k]);
    sse += r * r;
  }
  l.r2 = syy > 0 ? 1 - sse / syy : 1.0;
  return l;
}

void require_positive(const std::vector<double> &e, int a, int b) {
  for (int k = a; k <= b; ++k)
    if (!(e[k] > 0) || !std::isfinite(e[k]))
      throw RateError("rate fit: nonpositive or non-finite error " + std::to_string(e[k]) + " at index " +
                      std::to_string(k));
}

RateFit finish(const std::string &model, double param, const Line &l, const RateWindow &w, double floor) {
  RateFit f;
  f.model = model;
  f.parameter = param;
  f.intercept = l.intercept;
  f.r_squared = l.r2;
  f.i_min = w.i_min;
  f.i_max = w.i_max;
  f.floor = floor;
  return f;
}

} // namespace

nlohmann::json RateFit::to_json() const {
  return {{"model", model}, {"parameter", parameter}, {"intercept", intercept}, {"r_squared", r_squared},
          {"window", {i_min, i_max}}, {"floor", floor}};
}

RateWindow resolve_window(const std::vector<double> &e, RateWindow w, double floor_rel) {
  const int n = static_cast<int>(e.size());
  if (n == 0) throw RateError("rate fit: empty error sequence");
  const double floor = floor_rel * std::abs(e[0]);
  int last = n - 1;
  for (int k = 0; k < n; ++k) {
    // Negative values at or above floor level are not roundoff.
    if (e[k] <= -floor && k >= std::max(w.i_min, 0))
      throw RateError("rate fit: negative error " + std::to_string(e[k]) + " at index " + std::to_string(k));
    if (e[k] < floor) {
      last = k - 1;
      break;
    }
  }
  if (w.i_min < 0) w.i_min = n / 10;
  if (w.i_max < 0 || w.i_max > last) w.i_max = std::min(last, w.i_max < 0 ? n - 1 : w.i_max);
  return w;
}

RateFit fit_power(const std::vector<double> &e, RateWindow w, double floor_rel) {
  w = resolve_window(e, w, floor_rel);
  w.i_min = std::max(w.i_min, 1);
  if (w.i_max - w.i_min + 1 < 10)
    throw RateError("fit_power: window [" + std::to_string(w.i_min) + ", " + std::to_string(w.i_max) +
                    "] has fewer than 10 points");
  require_positive(e, w.i_min, w.i_max);
  std::vector<double> x, y;
  for (int k = w.i_min; k <= w.i_max; ++k) {
    x.push_back(std::log(double(k)));
    y.push_back(std::log(e[k]));
  }
  Line l = least_squares_line(x, y);
  return finish("power", l.slope, l, w, floor_rel * std::abs(e[0]));
}

RateFit fit_linear(const std::vector<double> &e, RateWindow w, double floor_rel) {
  w = resolve_window(e, w, floor_rel);
  if (w.i_max - w.i_min + 1 < 10)
    throw RateError("fit_linear: window [" + std::to_string(w.i_min) + ", " + std::to_string(w.i_max) +
                    "] has fewer than 10 points");
  require_positive(e, w.i_min, w.i_max);
  std::vector<double> x, y;
  for (int k = w.i_min; k <= w.i_max; ++k) {
    x.push_back(double(k));
    y.push_back(std::log(e[k]));
  }
  Line l = least_squares_line(x, y);
  return finish("linear", std::exp(l.slope), l, w, floor_rel * std::abs(e[0]));
}

RateFit fit_order(const std::vector<double> &e, RateWindow w, double floor_rel) {
  w = resolve_window(e, w, floor_rel);
  if (w.i_max - w.i_min + 1 < 3)
    throw RateError("fit_order: only " + std::to_string(std::max(0, w.i_max - w.i_min + 1)) +
                    " iterations above the floor; need 3");
  require_positive(e, w.i_min, w.i_max);
  std::vector<double> x, y;
  for (int k = w.i_min; k < w.i_max; ++k) {
    x.push_back(std::log(e[k]));
    y.push_back(std::log(e[k + 1]));
  }
  Line l = least_squares_line(x, y);
  return finish("superlinear-q", l.slope, l, w, floor_rel * std::abs(e[0]));
}

} // namespace ppm
