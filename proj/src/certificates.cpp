#include "ppm/certificates.hpp"

#include "ppm/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ppm {

namespace {

double q(const LinearMap &A, const Vec &v) { return seminorm_sq(A, v); }

double qm(const Mat &A, const Vec &v) { return v.dot(A * v); }

const SaddleParts &saddle_of(const StepPlan &plan) {
  if (!plan.saddle) throw std::invalid_argument("certificate needs a primal-dual step plan");
  return *plan.saddle;
}

double delta_of(const StepPlan &plan, const Vec &next, const Vec &prev, const Vec &star) {
  return plan.delta ? plan.delta(next, prev, star) : 0.0;
}

void check_star(const TrajectoryLog &log, const Vec &u_star) {
  if (log.iterates.empty()) throw std::invalid_argument("certificate: empty trajectory");
  if (u_star.size() != log.iterates.front().size())
    throw DimensionError("certificate: u* has dimension " + std::to_string(u_star.size()) + ", iterates " +
                         std::to_string(log.iterates.front().size()));
}

// Running DI residual for N = 1..n_steps.
std::vector<double> running_di(const TrajectoryLog &log, const Vec &u_star) {
  const int N = log.n_steps();
  std::vector<double> out(N);
  double acc = 0.5 * q(log.metric(0), log.iterates[0] - u_star);
  for (int i = 0; i < N; ++i) {
    acc += delta_of(log.plans[i], log.iterates[i + 1], log.iterates[i], u_star);
    out[i] = acc - 0.5 * q(log.metric(i + 1), log.iterates[i + 1] - u_star);
  }
  return out;
}

double ratio_mismatch(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

} // namespace

nlohmann::json CertificateReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["verdict"] = verdict();
  j["min_residual"] = min_residual;
  j["scale"] = scale;
  j["n_iterations"] = n_iterations;
  j["worst_index"] = worst_index;
  return j;
}

CertificateReport make_report(std::string name, std::vector<double> residuals, double scale, int n_iterations,
                              double tol) {
  CertificateReport r;
  r.name = std::move(name);
  r.scale = scale;
  r.tol = tol;
  r.n_iterations = n_iterations;
  r.min_residual = residuals.empty() ? 0.0 : residuals.front();
  r.worst_index = residuals.empty() ? -1 : 0;
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    // NaN counts as the worst possible residual
    if (std::isnan(residuals[k]) || residuals[k] < r.min_residual) {
      r.min_residual = residuals[k];
      r.worst_index = static_cast<int>(k);
      if (std::isnan(residuals[k])) break;
    }
  }
  if (std::isnan(r.min_residual)) r.min_residual = -infinity();
  r.residuals = std::move(residuals);
  return r;
}

double certificate_scale(const TrajectoryLog &log, const Vec &u_star) {
  double phi = 1;
  for (const auto &p : log.plans)
    if (std::isfinite(p.scalars.phi)) phi = std::max(phi, p.scalars.phi);
  if (std::isfinite(log.final_scalars.phi)) phi = std::max(phi, log.final_scalars.phi);
  const Vec d = log.iterates.front() - u_star;
  return std::max({1.0, d.squaredNorm() * phi, std::abs(q(log.metric(0), d))});
}

CertificateReport check_qf(const TrajectoryLog &log, const Vec &u_star) {
  check_star(log, u_star);
  const int N = log.n_steps();
  std::vector<double> res(N);
  for (int i = 0; i < N; ++i) {
    const Vec &u = log.iterates[i], &un = log.iterates[i + 1];
    res[i] = 0.5 * q(log.metric(i), u - u_star) + delta_of(log.plans[i], un, u, u_star) -
             0.5 * q(log.metric(i + 1), un - u_star);
  }
  return make_report("QF", std::move(res), certificate_scale(log, u_star), N);
}

CertificateReport check_ci(const TrajectoryLog &log, const Vec &u_star, CiVariant variant) {
  check_star(log, u_star);
  const int N = log.n_steps();
  std::vector<double> res(N);
  for (int i = 0; i < N; ++i) {
    const StepPlan &plan = log.plans[i];
    const Vec &u = log.iterates[i], &un = log.iterates[i + 1];
    const Vec d = un - u, e = un - u_star;
    Vec Ht;
    if (variant == CiVariant::tilde) {
      Ht = -plan.M.apply(d);
    } else if (plan.selection) {
      Ht = plan.W.apply(*plan.selection);
      if (plan.vprime) Ht += plan.vprime(un);
    } else {
      Ht = plan.htilde;
    }
    const LinearMap zm = plan.ZM();
    res[i] = plan.Z.apply(Ht).dot(e) - 0.5 * (q(log.metric(i + 1), e) - q(zm, e)) + 0.5 * q(zm, d) +
             delta_of(plan, un, u, u_star);
  }
  return make_report(variant == CiVariant::tilde ? "CI~" : "CI", std::move(res), certificate_scale(log, u_star), N);
}

CertificateReport check_di(const TrajectoryLog &log, const Vec &u_star) {
  check_star(log, u_star);
  return make_report("DI", running_di(log, u_star), certificate_scale(log, u_star), log.n_steps());
}

double telescoping_gap(const TrajectoryLog &log, const Vec &u_star) {
  auto qf = check_qf(log, u_star);
  double s = 0;
  for (double r : qf.residuals) s += r;
  return s - running_di(log, u_star).back();
}

CertificateReport check_ci_gamma(const TrajectoryLog &log, const Vec &u_star, double gamma_tilde, double L_i) {
  check_star(log, u_star);
  const int N = log.n_steps();
  std::vector<double> res(N);
  for (int i = 0; i < N; ++i) {
    const StepPlan &plan = log.plans[i];
    const SaddleParts &sp = saddle_of(plan);
    const Index nx = sp.nx, ny = sp.ny;
    const Vec &u = log.iterates[i], &un = log.iterates[i + 1];
    const Vec d = un - u, e = un - u_star;
    const Vec ex = e.head(nx), ey = e.tail(ny);
    const double a = sp.phi * sp.tau, b = sp.psi * sp.sigma;
    const LinearMap zm = plan.ZM();
    double r = 0.5 * (q(zm, d) - a * L_i * d.head(nx).squaredNorm());
    // 1/2 |e|^2_{Z Xi(Gamma)}
    r += a * gamma_tilde * ex.squaredNorm() + a * sp.K.apply_adjoint(ey).dot(ex) - b * sp.K.apply(ex).dot(ey);
    r += 0.5 * (q(zm, e) - q(log.metric(i + 1), e));
    Vec v = Vec::Zero(e.size());
    if (plan.vprime) v += plan.vprime(un);
    if (sp.vj) v -= sp.vj(un);
    r += plan.Z.apply(v).dot(e);
    r += delta_of(plan, un, u, u_star);
    res[i] = r;
  }
  return make_report("CI-Γ", std::move(res), certificate_scale(log, u_star), N);
}

double gap(const SaddleProblem &p, const Vec &x, const Vec &y, const Vec &x_star, const Vec &y_star) {
  if (!p.Fstar.has_conj()) throw std::domain_error("gap: " + p.name + " has no closed-form conjugate of F*");
  const double gx = p.G.eval(x) + p.J.eval(x);
  const double gs = p.G.eval(x_star) + p.J.eval(x_star);
  return gx + y_star.dot(p.K.apply(x)) - p.Fstar.eval(y_star) - (gs + y.dot(p.K.apply(x_star)) - p.Fstar.eval(y));
}

double gap(const SaddleProblem &p, const Vec &x, const Vec &y) {
  if (!p.known_solution) throw std::domain_error("gap: " + p.name + " has no saddle point attached");
  return gap(p, x, y, p.known_solution->first, p.known_solution->second);
}

double preliminary_gap(const StepPlan &plan, const Vec &u_next, const Vec &u_star) {
  const SaddleParts &sp = saddle_of(plan);
  const Vec x = u_next.head(sp.nx), y = u_next.tail(sp.ny);
  const Vec xs = u_star.head(sp.nx), ys = u_star.tail(sp.ny);
  const double a = sp.phi * sp.tau, b = sp.psi * sp.sigma;
  const Vec Kxs = sp.K.apply(xs);
  return a * sp.gsel.dot(x - xs) + b * sp.fsel.dot(y - ys) - (a - b) * ys.dot(Kxs) - b * y.dot(Kxs) +
         a * ys.dot(sp.K.apply(x));
}

double preliminary_gap_identity_rhs(const StepPlan &plan, const Vec &u_next, const Vec &u_star) {
  const SaddleParts &sp = saddle_of(plan);
  const Vec x = u_next.head(sp.nx), y = u_next.tail(sp.ny);
  const Vec ex = x - u_star.head(sp.nx), ey = y - u_star.tail(sp.ny);
  const double a = sp.phi * sp.tau, b = sp.psi * sp.sigma;
  const Vec hx = sp.gsel + sp.K.apply_adjoint(y);
  const Vec hy = sp.fsel - sp.K.apply(x);
  const double lhs = a * hx.dot(ex) + b * hy.dot(ey);
  const double lift = a * sp.K.apply_adjoint(ey).dot(ex) - b * sp.K.apply(ex).dot(ey);
  return lhs - lift;
}

ErgodicMode parse_ergodic_mode(const std::string &s) {
  if (s == "shifted" || s == "CG*") return ErgodicMode::shifted;
  if (s == "plain" || s == "CG") return ErgodicMode::plain;
  if (s == "value") return ErgodicMode::value;
  throw std::invalid_argument("unknown ergodic mode '" + s + "'");
}

namespace {

// Incremental ergodic averages; push() consumes step i.
class ErgodicAccumulator {
public:
  ErgodicAccumulator(const TrajectoryLog &log, ErgodicMode mode) : log_(log), mode_(mode) {
    const Vec &u0 = log.iterates.front();
    if (mode == ErgodicMode::value) {
      sx_ = Vec::Zero(u0.size());
    } else {
      const SaddleParts &sp = saddle_of(log.plans.front());
      nx_ = sp.nx;
      ny_ = sp.ny;
      sx_ = Vec::Zero(nx_);
      sy_ = Vec::Zero(ny_);
    }
  }

  void push(int i) {
    const StepPlan &plan = log_.plans[i];
    const Vec &un = log_.iterates[i + 1];
    const double a = plan.scalars.phi * plan.scalars.tau;
    if (mode_ == ErgodicMode::value) {
      sx_ += plan.Z.apply(plan.W.apply(un));
      zeta_ += a;
      ++count_;
      return;
    }
    const SaddleParts &sp = saddle_of(plan);
    const double pa = sp.phi * sp.tau;
    if (mode_ == ErgodicMode::plain) {
      const double b = sp.psi * sp.sigma;
      if (ratio_mismatch(pa, b) > 1e-12)
        throw std::domain_error("ergodic mode CG: coupling phi_i tau_i = psi_{i+1} sigma_{i+1} fails at i = " +
                                std::to_string(i) + " (" + fmt(pa) + " vs " + fmt(b) + ")");
      sx_ += pa * un.head(nx_);
      sy_ += b * un.tail(ny_);
      zeta_ += pa;
    } else if (i >= 1) {
      const SaddleParts &prev = saddle_of(log_.plans[i - 1]);
      const double b = prev.psi * prev.sigma; // psi_i sigma_i
      if (ratio_mismatch(pa, b) > 1e-12)
        throw std::domain_error("ergodic mode CG*: coupling phi_i tau_i = psi_i sigma_i fails at i = " +
                                std::to_string(i) + " (" + fmt(pa) + " vs " + fmt(b) + ")");
      sx_ += pa * un.head(nx_);
      sy_ += b * log_.iterates[i].tail(ny_);
      zeta_ += pa;
    }
    ++count_;
  }

  bool ready() const { return zeta_ > 0; }
  ErgodicPoint point() const {
    ErgodicPoint p;
    p.zeta = zeta_;
    p.x = sx_ / zeta_;
    if (mode_ != ErgodicMode::value) p.y = sy_ / zeta_;
    return p;
  }

private:
  const TrajectoryLog &log_;
  ErgodicMode mode_;
  Index nx_ = 0, ny_ = 0;
  Vec sx_, sy_;
  double zeta_ = 0;
  int count_ = 0;
};

} // namespace

ErgodicPoint ergodic_point(const TrajectoryLog &log, ErgodicMode mode, int N) {
  if (N < 0) N = log.n_steps();
  if (N < 1 || N > log.n_steps()) throw std::out_of_range("ergodic_point: N out of range");
  ErgodicAccumulator acc(log, mode);
  for (int i = 0; i < N; ++i) acc.push(i);
  if (!acc.ready())
    throw std::domain_error("ergodic_point: zero total weight after " + std::to_string(N) + " steps");
  return acc.point();
}

std::vector<double> ergodic_gaps(const TrajectoryLog &log, const SaddleProblem &p, const Vec &u_star,
                                 ErgodicMode mode, std::vector<double> *zetas) {
  const Index nx = p.nx();
  const Vec xs = u_star.head(nx), ys = u_star.tail(p.ny());
  ErgodicAccumulator acc(log, mode);
  std::vector<double> out(log.n_steps(), kNaN);
  if (zetas) zetas->assign(log.n_steps(), 0.0);
  for (int i = 0; i < log.n_steps(); ++i) {
    acc.push(i);
    if (!acc.ready()) continue;
    ErgodicPoint e = acc.point();
    out[i] = gap(p, e.x, e.y, xs, ys);
    if (zetas) (*zetas)[i] = e.zeta;
  }
  return out;
}

CertificateReport check_di_gap(const TrajectoryLog &log, const SaddleProblem &p, const Vec &u_star, ErgodicMode mode,
                               int stride) {
  check_star(log, u_star);
  if (stride < 1) stride = 1;
  std::vector<double> zetas;
  const auto gaps = ergodic_gaps(log, p, u_star, mode, &zetas);
  const auto di = running_di(log, u_star);
  std::vector<double> res;
  for (int i = 0; i < log.n_steps(); ++i) {
    if (std::isnan(gaps[i])) continue;
    if (i % stride != 0 && i + 1 != log.n_steps()) continue;
    res.push_back(di[i] - zetas[i] * gaps[i]);
  }
  return make_report("DI-𝒢", std::move(res), certificate_scale(log, u_star), log.n_steps());
}

CertificateReport check_value_di(const TrajectoryLog &log, const CompositeProblem &p, const Vec &u_star) {
  check_star(log, u_star);
  const double fs = p.value(u_star);
  const double c0 = 0.5 * q(log.metric(0), log.iterates[0] - u_star);
  double acc = 0;
  std::vector<double> res(log.n_steps());
  for (int i = 0; i < log.n_steps(); ++i) {
    const ScalarParams &s = log.plans[i].scalars;
    acc += s.phi * s.tau * (p.value(log.iterates[i + 1]) - fs);
    res[i] = c0 - 0.5 * q(log.metric(i + 1), log.iterates[i + 1] - u_star) - acc;
  }
  return make_report("value-DI", std::move(res), certificate_scale(log, u_star), log.n_steps());
}

std::vector<double> ergodic_value_gaps(const TrajectoryLog &log, const CompositeProblem &p, const Vec &u_star) {
  const double fs = p.value(u_star);
  ErgodicAccumulator acc(log, ErgodicMode::value);
  std::vector<double> out(log.n_steps());
  for (int i = 0; i < log.n_steps(); ++i) {
    acc.push(i);
    out[i] = p.value(acc.point().x) - fs;
  }
  return out;
}

std::vector<double> expected_ergodic_value_gaps(const std::vector<TrajectoryLog> &logs, const CompositeProblem &p,
                                                const Vec &u_star) {
  if (logs.empty()) throw std::invalid_argument("expected_ergodic_value_gaps: no replicates");
  const int N = logs.front().n_steps();
  const double R = double(logs.size());
  const double fs = p.value(u_star);
  std::vector<Vec> num(static_cast<std::size_t>(N), Vec::Zero(u_star.size()));
  std::vector<double> zeta(static_cast<std::size_t>(N), 0.0);
  for (const auto &log : logs) {
    if (log.n_steps() != N) throw std::invalid_argument("expected_ergodic_value_gaps: replicates differ in length");
    Vec acc = Vec::Zero(u_star.size());
    double z = 0;
    for (int i = 0; i < N; ++i) {
      const StepPlan &plan = log.plans[std::size_t(i)];
      acc += plan.Z.apply(plan.W.apply(log.iterates[std::size_t(i) + 1]));
      z += plan.scalars.phi * plan.scalars.tau;
      num[std::size_t(i)] += acc / R;
      zeta[std::size_t(i)] += z / R;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) out[std::size_t(i)] = p.value(num[std::size_t(i)] / zeta[std::size_t(i)]) - fs;
  return out;
}

CertificateReport expected_report(const std::string &name, const std::vector<std::vector<double>> &rows,
                                  double scale) {
  if (rows.size() < 2) throw std::invalid_argument("expected certificate needs at least two replicates");
  const std::size_t n = rows.front().size();
  const double R = static_cast<double>(rows.size());
  std::vector<double> res(n);
  for (std::size_t k = 0; k < n; ++k) {
    double m = 0;
    for (const auto &r : rows) m += r.at(k);
    m /= R;
    double v = 0;
    for (const auto &r : rows) v += (r[k] - m) * (r[k] - m);
    v /= R - 1;
    res[k] = m + 3 * std::sqrt(v / R);
  }
  return make_report(name, std::move(res), scale, static_cast<int>(n));
}

CertificateReport check_expected_di(const std::vector<TrajectoryLog> &logs, const Vec &u_star) {
  std::vector<std::vector<double>> rows;
  double scale = 1;
  for (const auto &l : logs) {
    check_star(l, u_star);
    rows.push_back(running_di(l, u_star));
    scale = std::max(scale, certificate_scale(l, u_star));
  }
  return expected_report("D𝓔", rows, scale);
}

// ---------------------------------------------------------------- three-point

namespace {

// Exact delta_{z,eta} for sum_k cosh(x_k - s) over the ball of radius |z - x*| about x*.
double cosh_delta(double shift, const Vec &xs, const Vec &z, const Vec &eta) {
  const double r = (z - xs).norm();
  double d = 0;
  for (Index k = 0; k < xs.size(); ++k) {
    const double lo = xs[k] - r - shift, hi = xs[k] + r - shift;
    const double hmax = std::cosh(std::max(std::abs(lo), std::abs(hi)));
    const double hmin = (lo <= 0 && hi >= 0) ? 1.0 : std::cosh(std::min(std::abs(lo), std::abs(hi)));
    const double he = std::cosh(eta[k] - shift);
    d = std::max({d, 1 - hmin / he, hmax / he - 1});
  }
  return d;
}

Mat random_spd(Index n, double lo, double hi, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::normal_distribution<double> nd;
  Mat G(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) G(i, j) = nd(rng);
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  Vec ev = Vec::LinSpaced(n, lo, hi);
  return Q * ev.asDiagonal() * Q.transpose();
}

Mat random_mat(Index m, Index n, std::uint64_t seed) {
  CounterRng rng(seed, 1);
  std::normal_distribution<double> nd;
  Mat A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = nd(rng) / std::sqrt(double(m));
  return A;
}

} // namespace

std::vector<std::string> three_point_ids() {
  return {"hypomonotonicity",    "smoothness",    "hypomonotonicity-sc",  "smoothness-sc",
          "hypomonotonicity-c2", "smoothness-c2", "hypomonotonicity-c2x", "smoothness-c2x"};
}

std::vector<ThreePointFixture> three_point_fixtures() {
  std::vector<ThreePointFixture> out;
  {
    ThreePointFixture f;
    f.name = "quadratic";
    f.J = quadratic_smooth(random_spd(3, 0.5, 3, 11), Vec::Zero(3));
    f.box = 2;
    f.strongly_convex = true;
    f.c2 = true;
    f.delta = [](const Vec &, const Vec &, const Vec &) { return 0.0; };
    out.push_back(f);
  }
  {
    ThreePointFixture f;
    f.name = "least_squares";
    Mat A = random_mat(6, 3, 12);
    Vec b = Vec::LinSpaced(6, -1, 1);
    f.J = least_squares(A, b);
    f.box = 2;
    f.strongly_convex = f.J.gamma > 0;
    f.c2 = true;
    f.delta = [](const Vec &, const Vec &, const Vec &) { return 0.0; };
    out.push_back(f);
  }
  {
    ThreePointFixture f;
    f.name = "logistic";
    f.J = logistic(random_mat(8, 3, 13));
    f.box = 3;
    out.push_back(f);
  }
  for (Index n : {Index(1), Index(3)}) {
    ThreePointFixture f;
    const double shift = n == 1 ? 0.0 : 0.2;
    f.name = n == 1 ? "cosh" : "cosh3";
    f.J = cosh_sum(n, shift);
    f.box = 1;
    f.lipschitz = false;
    f.c2 = true;
    f.delta = [shift](const Vec &xs, const Vec &z, const Vec &eta) { return cosh_delta(shift, xs, z, eta); };
    out.push_back(f);
  }
  return out;
}

namespace {

bool applicable(const ThreePointFixture &f, const std::string &which) {
  if (which == "hypomonotonicity" || which == "smoothness") return f.lipschitz;
  if (which == "hypomonotonicity-sc" || which == "smoothness-sc") return f.lipschitz && f.strongly_convex;
  return f.c2 && static_cast<bool>(f.delta) && static_cast<bool>(f.J.hess_dense);
}

bool needs_ball(const std::string &which) { return which == "smoothness-c2" || which == "smoothness-c2x"; }

} // namespace

bool three_point_applicable(const ThreePointFixture &f, const std::string &which) { return applicable(f, which); }

double three_point_margin(const ThreePointFixture &f, const std::string &which, const ThreePointSample &s,
                          double *scale) {
  const SmoothFn &J = f.J;
  const Vec &xs = s.x_star, &z = s.z, &x = s.x;
  const double tau = s.tau, L = J.L, g = J.gamma;
  double lhs = 0, rhs = 0;
  const Vec dx = x - xs, dz = x - z;
  if (which == "hypomonotonicity") {
    lhs = (J.grad(z) - J.grad(xs)).dot(dx);
    rhs = -L / 4 * dz.squaredNorm();
  } else if (which == "smoothness") {
    lhs = J.grad(z).dot(dx);
    rhs = J.eval(x) - J.eval(xs) - L / 2 * dz.squaredNorm();
  } else if (which == "hypomonotonicity-sc") {
    lhs = (J.grad(z) - J.grad(xs)).dot(dx);
    rhs = (2 * g - tau * L * L) / 2 * dx.squaredNorm() - dz.squaredNorm() / (2 * tau);
  } else if (which == "smoothness-sc") {
    lhs = J.grad(z).dot(dx);
    rhs = J.eval(x) - J.eval(xs) + (g - tau * L * L) / 2 * dx.squaredNorm() - dz.squaredNorm() / (2 * tau);
  } else if (which == "hypomonotonicity-c2" || which == "smoothness-c2" || which == "hypomonotonicity-c2x" ||
             which == "smoothness-c2x") {
    const Mat H = J.hess_dense(s.eta);
    const double d = f.delta(xs, z, s.eta);
    const double nx = qm(H, dx), nz = qm(H, dz), nzs = qm(H, z - xs);
    if (which == "hypomonotonicity-c2") {
      lhs = (J.grad(z) - J.grad(xs)).dot(dx);
      rhs = (1 - d) * (2 - tau) / 2 * nx - (1 + d) / (2 * tau) * nz;
    } else if (which == "smoothness-c2") {
      lhs = J.grad(z).dot(dx);
      rhs = J.eval(x) - J.eval(xs) + ((1 - d) * (1 - tau) - 2 * d) / 2 * nx - (1 + d) / (2 * tau) * nz;
    } else if (which == "hypomonotonicity-c2x") {
      lhs = (J.grad(z) - J.grad(xs)).dot(dx);
      rhs = (1 - d) / 2 * nx + (1 - d) / 2 * nzs - 0.5 * nz;
    } else {
      lhs = J.grad(z).dot(dx);
      rhs = -d * nx + (1 - d) / 2 * nzs - 0.5 * nz + J.eval(x) - J.eval(xs);
    }
  } else {
    throw std::invalid_argument("unknown three-point inequality '" + which + "'");
  }
  if (scale) *scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return lhs - rhs;
}

PropertyReport three_point_suite(const ThreePointFixture &f, const std::string &which, int n_samples,
                                 std::uint64_t seed) {
  const auto ids = three_point_ids();
  if (std::find(ids.begin(), ids.end(), which) == ids.end())
    throw std::invalid_argument("unknown three-point inequality '" + which + "'");
  if (!applicable(f, which))
    throw std::invalid_argument("three-point inequality '" + which + "' needs constants fixture '" + f.name +
                                "' does not carry");
  PropertyReport rep;
  rep.suite = "three-point";
  rep.fixture = f.name;
  rep.inequality = which;
  CounterRng rng(seed, 17);
  std::uniform_real_distribution<double> box(-f.box, f.box), unit(0, 1);
  const Index n = f.J.dim;
  auto draw = [&] {
    Vec v(n);
    for (Index k = 0; k < n; ++k) v[k] = box(rng);
    return v;
  };
  const bool c2 = which.find("c2") != std::string::npos;
  for (int s = 0; s < n_samples; ++s) {
    ThreePointSample smp;
    smp.x_star = draw();
    smp.z = draw();
    smp.x = draw();
    smp.eta = draw();
    if (c2) {
      if (which == "hypomonotonicity-c2" || which == "smoothness-c2") smp.tau = 2 * (1 - unit(rng)); // (0, 2]
    } else {
      smp.tau = std::pow(10.0, 4 * unit(rng) - 2) / std::max(f.J.L, 1e-12);
    }
    if (needs_ball(which)) {
      const double r = (smp.z - smp.x_star).norm();
      Vec d = smp.x - smp.x_star;
      const double nd = d.norm();
      if (nd > r) smp.x = smp.x_star + d * (r * unit(rng) / nd);
    }
    double sc = 1;
    const double m = three_point_margin(f, which, smp, &sc);
    const double rel = -m / sc;
    if (std::isnan(m) || rel > 1e-9) ++rep.violations;
    rep.worst = std::max(rep.worst, std::isnan(m) ? infinity() : rel);
    ++rep.samples;
  }
  return rep;
}

nlohmann::json PropertyReport::to_json() const {
  return {{"suite", suite},           {"fixture", fixture}, {"inequality", inequality}, {"samples", samples},
          {"violations", violations}, {"worst", worst},     {"verdict", pass() ? "pass" : "fail"}};
}

// ---------------------------------------------------------------- subspace chain

std::vector<SubspaceFixture> subspace_fixtures() {
  std::vector<SubspaceFixture> out;
  {
    SubspaceFixture f;
    f.name = "diag_quadratic";
    Vec a(2);
    a << 1, 4;
    f.J = quadratic_smooth(Mat(a.asDiagonal()), Vec::Zero(2));
    f.P = Mat::Zero(2, 2);
    f.P(0, 0) = 1;
    f.Pplus = f.P;
    f.L = 1;
    out.push_back(f);
  }
  {
    SubspaceFixture f;
    f.name = "identity";
    f.J = quadratic_smooth(random_spd(3, 0.5, 2.5, 21), Vec::Zero(3));
    f.P = f.Pplus = Mat::Identity(3, 3);
    f.L = f.J.L;
    out.push_back(f);
  }
  {
    SubspaceFixture f;
    f.name = "logistic";
    f.J = logistic(random_mat(8, 3, 22));
    f.P = f.Pplus = Mat::Identity(3, 3);
    f.L = f.J.L;
    out.push_back(f);
  }
  {
    // block-diagonal quadratic, P = Pi_S for S = {block 0} with pi = 1/2
    SubspaceFixture f;
    f.name = "weighted_block";
    Mat A = Mat::Zero(4, 4);
    A.topLeftCorner(2, 2) = random_spd(2, 0.5, 2, 23);
    A.bottomRightCorner(2, 2) = random_spd(2, 1, 3, 24);
    f.J = quadratic_smooth(A, Vec::Zero(4));
    f.P = Mat::Zero(4, 4);
    f.P.topLeftCorner(2, 2) = 2 * Mat::Identity(2, 2);
    f.Pplus = Mat::Zero(4, 4);
    f.Pplus.topLeftCorner(2, 2) = 0.5 * Mat::Identity(2, 2);
    Eigen::SelfAdjointEigenSolver<Mat> es(A.topLeftCorner(2, 2));
    f.L = 2 * es.eigenvalues().maxCoeff();
    out.push_back(f);
  }
  {
    SubspaceFixture f;
    f.name = "understated";
    Vec a(2);
    a << 1, 4;
    f.J = quadratic_smooth(Mat(a.asDiagonal()), Vec::Zero(2));
    f.P = f.Pplus = Mat::Identity(2, 2);
    f.L = 1;
    f.expect_violation = true;
    out.push_back(f);
  }
  return out;
}

bool SubspaceReport::pass() const {
  if (implication_broken) return false;
  for (const auto &i : items)
    if (!i.pass()) return false;
  return true;
}

nlohmann::json SubspaceReport::to_json() const {
  nlohmann::json j;
  j["fixture"] = fixture;
  j["implication_broken"] = implication_broken;
  j["verdict"] = pass() ? "pass" : "fail";
  j["items"] = nlohmann::json::array();
  for (const auto &i : items) j["items"].push_back(i.to_json());
  return j;
}

SubspaceReport subspace_chain(const SubspaceFixture &f, int n_samples, std::uint64_t seed) {
  const Mat &P = f.P, &Pp = f.Pplus;
  const Index n = P.rows();
  const double pn = std::max(1.0, P.norm());
  if ((P - P.transpose()).norm() > 1e-12 * pn) throw std::invalid_argument("subspace_chain: P is not self-adjoint");
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  if (es.eigenvalues().minCoeff() < -1e-12 * pn)
    throw std::invalid_argument("subspace_chain: P is not positive semidefinite");
  if ((P * Pp * P - P).norm() > 1e-10 * pn)
    throw std::invalid_argument("subspace_chain: pseudo-inverse identity P P+ P = P fails");

  const SmoothFn &J = f.J;
  const double L = f.L;
  SubspaceReport rep;
  rep.fixture = f.name;
  const char *names[5] = {"(i) lipschitz", "(ii) monotone-increment", "(iii) smoothness", "(iv) gradient-smoothness",
                          "(v) cocoercivity"};
  for (auto nm : names) {
    PropertyReport r;
    r.suite = "subspace";
    r.fixture = f.name;
    r.inequality = nm;
    rep.items.push_back(r);
  }
  auto record = [&](int k, double lhs, double rhs) {
    // lhs <= rhs expected
    const double sc = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    const double rel = (lhs - rhs) / sc;
    auto &r = rep.items[k];
    ++r.samples;
    if (std::isnan(rel) || rel > 1e-9) ++r.violations;
    r.worst = std::max(r.worst, std::isnan(rel) ? infinity() : rel);
  };
  auto nP = [&](const Vec &v) { return v.dot(P * v); };
  auto evaluate = [&](const Vec &x, const Vec &y, const Vec &h) {
    const Vec gx = J.grad(x), gy = J.grad(y), g = gx - gy;
    record(0, std::sqrt(std::max(0.0, nP(g))), L * std::sqrt(std::max(0.0, (x - y).dot(Pp * (x - y)))));
    const Vec Ph = P * h;
    record(1, (J.grad(x + Ph) - gx).dot(Ph), L * nP(h));
    record(2, J.eval(x + Ph), J.eval(x) + gx.dot(Ph) + L / 2 * nP(h));
    record(3, J.eval(y), J.eval(x) + gy.dot(y - x) - nP(g) / (2 * L));
    record(4, nP(g) / L, g.dot(x - y));
  };

  // probe along the top curvature direction of P^{1/2} H P^{1/2}
  if (J.hess_dense) {
    const Vec x0 = Vec::Zero(n);
    Mat Ph(n, n);
    Eigen::SelfAdjointEigenSolver<Mat> eP(P);
    Ph = eP.eigenvectors() * eP.eigenvalues().cwiseMax(0).cwiseSqrt().asDiagonal() * eP.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Mat> eH(Ph * J.hess_dense(x0) * Ph);
    const Vec v = eH.eigenvectors().col(n - 1);
    evaluate(x0, P * v, v);
  }
  CounterRng rng(seed, 29);
  std::normal_distribution<double> nd(0, 2);
  auto draw = [&] {
    Vec v(n);
    for (Index k = 0; k < n; ++k) v[k] = nd(rng);
    return v;
  };
  for (int s = 0; s < n_samples; ++s) {
    Vec x = draw(), y = draw(), h = draw();
    evaluate(x, y, h);
  }
  auto ok = [&](int k) { return rep.items[k].violations == 0; };
  // (i) => (ii) <=> (iii) => (iv) => (v)
  rep.implication_broken = (ok(0) && !ok(1)) || (ok(1) && !ok(2)) || (ok(2) && !ok(1)) || (ok(2) && !ok(3)) ||
                           (ok(3) && !ok(4)) || (ok(2) && !ok(4));
  return rep;
}

PropertyReport sampler_unbiasedness(const BlockSampler &sampler, int draws, double tol) {
  PropertyReport rep;
  rep.suite = "sampler";
  rep.fixture = to_string(sampler.scheme) + "/m=" + std::to_string(sampler.m());
  rep.inequality = "max |E[Pi_S] - I|";
  Vec acc = Vec::Zero(sampler.layout.total());
  for (int i = 0; i < draws; ++i) acc += sample(sampler, i).weights;
  acc /= double(draws);
  rep.samples = draws;
  rep.worst = (acc.array() - 1).abs().maxCoeff();
  rep.violations = rep.worst > tol ? 1 : 0;
  return rep;
}

} // namespace ppm
