#include "ppm/solvers.hpp"

#include <cmath>
#include <sstream>

namespace ppm {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

LinearMap scalar_pair(Index nx, Index ny, double a, double b) {
  return block_diag({scaled_identity(nx, a), scaled_identity(ny, b)});
}

// V^J(u) = (tau (grad J(x^i) - grad J(x)), 0).
std::function<Vec(const Vec &)> vj_map(const SmoothFn &J, const Vec &gx, double tau, Index nx, Index ny) {
  if (J.is_zero) return [n = nx + ny](const Vec &) -> Vec { return Vec::Zero(n); };
  return [J, gx, tau, nx, ny](const Vec &u) -> Vec {
    Vec r = Vec::Zero(nx + ny);
    r.head(nx) = tau * (gx - J.grad(u.head(nx)));
    return r;
  };
}

class ChambollePock final : public Solver {
public:
  ChambollePock(SaddleProblem p, ScalarSchedule s, double theta, bool forward)
      : p_(std::move(p)), s_(s), theta_(theta), forward_(forward) {
    s_.reset();
  }

  std::string name() const override { return forward_ ? "cp-forward" : "cp"; }
  BlockLayout layout() const override { return p_.layout(); }
  void reset() override { s_.reset(); }

  LinearMap metric(const Vec &) const override {
    return compose(scalar_pair(p_.nx(), p_.ny(), s_.phi, s_.psi), M(s_.tau, s_.sigma));
  }
  ScalarParams next_scalars() const override {
    ScalarParams sp;
    sp.tau = s_.tau;
    sp.sigma = s_.sigma / s_.omega;
    sp.phi = s_.phi;
    sp.psi = s_.psi;
    sp.omega = s_.omega;
    return sp;
  }

  std::pair<Vec, StepPlan> step(const Vec &u, int) override {
    const Index nx = p_.nx(), ny = p_.ny();
    const double tau = s_.tau, sigma_i = s_.sigma, omega = s_.omega;
    const double sigma = sigma_i / omega;
    const double phi = s_.phi, psi = s_.psi;
    Vec x = u.head(nx), y = u.tail(ny);

    Vec gx = forward_ ? p_.J.grad(x) : Vec::Zero(nx);
    Vec v = x - tau * p_.K.apply_adjoint(y);
    if (forward_) v -= tau * gx;
    Vec x1 = p_.G.prox(tau, v);
    Vec xbar = x1 + omega * (x1 - x);
    Vec w = y + sigma * p_.K.apply(xbar);
    Vec y1 = p_.Fstar.prox(sigma, w);

    Vec next(nx + ny);
    next << x1, y1;

    SaddleParts sp;
    sp.K = p_.K;
    sp.nx = nx;
    sp.ny = ny;
    sp.tau = tau;
    sp.sigma = sigma;
    sp.phi = phi;
    sp.psi = psi;
    sp.gsel = (v - x1) / tau;
    if (forward_) sp.gsel += p_.J.grad(x1);
    sp.fsel = (w - y1) / sigma;
    sp.vj = vj_map(p_.J, gx, tau, nx, ny);

    StepPlan plan;
    plan.M = M(tau, sigma_i);
    plan.W = scalar_pair(nx, ny, tau, sigma);
    plan.Z = scalar_pair(nx, ny, phi, psi);
    plan.vprime = sp.vj;
    plan.scalars = next_scalars();
    Vec h(nx + ny);
    h << sp.gsel + p_.K.apply_adjoint(y1), sp.fsel - p_.K.apply(x1);
    plan.selection = h;
    plan.htilde = plan.W.apply(h) + plan.vprime(next);
    LinearMap zm = plan.ZM();
    const double theta = theta_;
    plan.delta = [zm, theta](const Vec &nx_, const Vec &pv, const Vec &) {
      return -theta / 2 * seminorm_sq(zm, nx_ - pv);
    };
    plan.saddle = std::move(sp);
    s_.advance();
    return {std::move(next), std::move(plan)};
  }

private:
  // [[I, -tau_i K*], [-sigma_i K, I]]
  LinearMap M(double tau, double sigma_i) const {
    const Index nx = p_.nx(), ny = p_.ny();
    return block_2x2(identity(nx), scale(-tau, p_.K.adjoint()), scale(-sigma_i, p_.K), identity(ny));
  }

  SaddleProblem p_;
  ScalarSchedule s_;
  double theta_;
  bool forward_;
};

class Gist final : public Solver {
public:
  Gist(SaddleProblem p, double Li) : p_(std::move(p)), Li_(Li) {}

  std::string name() const override { return "gist"; }
  BlockLayout layout() const override { return p_.layout(); }
  void reset() override {}
  LinearMap metric(const Vec &) const override { return M(); }
  ScalarParams next_scalars() const override { return {1, 1, 1, 1, 1}; }

  std::pair<Vec, StepPlan> step(const Vec &u, int) override {
    const Index nx = p_.nx(), ny = p_.ny();
    Vec x = u.head(nx), y = u.tail(ny);
    Vec gx = p_.J.grad(x);
    Vec Kty = p_.K.apply_adjoint(y);
    Vec w = y - p_.K.apply(Kty) + p_.K.apply(x - gx);
    Vec y1 = p_.Fstar.prox(1.0, w);
    Vec x1 = x - gx - p_.K.apply_adjoint(y1);
    Vec next(nx + ny);
    next << x1, y1;

    SaddleParts sp;
    sp.K = p_.K;
    sp.nx = nx;
    sp.ny = ny;
    sp.gsel = p_.J.grad(x1);
    sp.fsel = w - y1;
    sp.vj = vj_map(p_.J, gx, 1.0, nx, ny);

    StepPlan plan;
    plan.M = M();
    plan.W = identity(nx + ny);
    plan.Z = identity(nx + ny);
    plan.vprime = sp.vj;
    plan.scalars = next_scalars();
    Vec h(nx + ny);
    h << sp.gsel + p_.K.apply_adjoint(y1), sp.fsel - p_.K.apply(x1);
    plan.selection = h;
    plan.htilde = h + plan.vprime(next);
    LinearMap m = plan.M;
    const double Li = Li_;
    // -1/2 |u+ - u|^2_{M - Q(L_i)}, Q(L) = diag(L I, 0)
    plan.delta = [m, Li, nx](const Vec &a, const Vec &b, const Vec &) {
      Vec d = a - b;
      return -0.5 * (seminorm_sq(m, d) - Li * d.head(nx).squaredNorm());
    };
    plan.saddle = std::move(sp);
    return {std::move(next), std::move(plan)};
  }

private:
  LinearMap M() const {
    const Index nx = p_.nx(), ny = p_.ny();
    LinearMap KKt = compose(p_.K, p_.K.adjoint());
    return block_diag({identity(nx), sum(identity(ny), scale(-1.0, KKt))});
  }

  SaddleProblem p_;
  double Li_;
};

} // namespace

std::unique_ptr<Solver> make_cp(const SaddleProblem &p, double tau0, double sigma0, double gamma, CpOptions opt) {
  if (!(tau0 > 0 && sigma0 > 0)) throw PreconditionError("cp: tau0 and sigma0 must be positive");
  if (!p.J.is_zero && !opt.forward_step)
    throw PreconditionError("cp: J is nonzero; enable forward_step to take gradient steps on J");
  if (gamma < 0) throw PreconditionError("cp: gamma must be nonnegative");
  const double gmax = opt.gap_mode ? p.G.gamma / 2 : p.G.gamma;
  if (gamma > gmax * (1 + 1e-12))
    throw PreconditionError("cp: acceleration gamma = " + num(gamma) + " exceeds the admissible " + num(gmax));
  const double Knorm = op_norm(p.K);
  const double c = tau0 * sigma0 * Knorm * Knorm;
  if (!(c < 1))
    throw PreconditionError("cp step initialisation: tau0*sigma0*|K|^2 = " + num(c) + " >= 1 (|K| = " +
                            num(Knorm) + ")");
  double theta = 1;
  if (opt.forward_step) {
    const double Lf = (opt.gap_mode ? 2 : 1) * p.J.L;
    theta = 1 - Lf * tau0 / (1 - c);
    if (!(theta > 0))
      throw PreconditionError("cp forward-step initialisation: theta = 1 - " + std::string(opt.gap_mode ? "2" : "") +
                              "L*tau0/(1 - tau0*sigma0*|K|^2) = " + num(theta) + " <= 0");
  }
  return std::make_unique<ChambollePock>(p, cp_schedule(tau0, sigma0, gamma), theta, opt.forward_step);
}

std::unique_ptr<Solver> make_gist(const SaddleProblem &p, GistOptions opt) {
  if (p.G.name != "zero") throw PreconditionError("gist: requires G = 0");
  if (!p.J.quadratic) throw PreconditionError("gist: requires J(x) = 1/2 |f - Ax|^2");
  const double L = p.J.L;
  const double Knorm = op_norm(p.K);
  if (opt.gap_mode ? !(L <= 1 + 1e-12) : !(L < 2))
    throw PreconditionError("gist: |A|^2 = " + num(L) + (opt.gap_mode ? " exceeds 1" : " is not below 2"));
  if (!(Knorm <= 1 + 1e-9)) throw PreconditionError("gist: |K| = " + num(Knorm) + " exceeds 1");
  return std::make_unique<Gist>(p, opt.gap_mode ? L : L / 2);
}

} // namespace ppm
