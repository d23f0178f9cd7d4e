#include "ppm/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppm {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// Proximal point, gradient descent and forward-backward share one plan:
// M = I, W = tau_i I, Z = phi_i I, V'(u) = tau_i (grad J(u^i) - grad J(u)).
class ForwardBackward final : public Solver {
public:
  ForwardBackward(std::string name, CompositeProblem p, ScalarSchedule s, bool accel, bool value_mode)
      : name_(std::move(name)), p_(std::move(p)), s_(s), accel_(accel), value_mode_(value_mode) {
    s_.reset();
  }

  std::string name() const override { return name_; }
  BlockLayout layout() const override { return BlockLayout::single(p_.dim()); }
  void reset() override { s_.reset(); }

  LinearMap metric(const Vec &) const override { return scaled_identity(p_.dim(), s_.phi); }
  ScalarParams next_scalars() const override { return scalars(); }

  std::pair<Vec, StepPlan> step(const Vec &u, int) override {
    const double tau = s_.tau, phi = s_.phi;
    const bool smooth = !p_.J.is_zero;
    Vec g = smooth ? p_.J.grad(u) : Vec::Zero(u.size());
    Vec v = smooth ? Vec(u - tau * g) : u;
    Vec next = p_.G.prox(tau, v);

    const Index n = u.size();
    StepPlan plan;
    plan.M = identity(n);
    plan.W = scaled_identity(n, tau);
    plan.Z = scaled_identity(n, phi);
    plan.scalars = scalars();
    Vec gnext = smooth ? p_.J.grad(next) : Vec::Zero(n);
    plan.selection = Vec((v - next) / tau + gnext);
    if (smooth) {
      auto J = p_.J;
      plan.vprime = [J, g, tau](const Vec &w) -> Vec { return tau * (g - J.grad(w)); };
    } else {
      plan.vprime = [n](const Vec &) -> Vec { return Vec::Zero(n); };
    }
    plan.htilde = tau * (*plan.selection) + plan.vprime(next);

    const double L = smooth ? p_.J.L : 0.0;
    if (value_mode_) {
      auto G = p_.G;
      auto J = p_.J;
      // Clamped so forced oversized steps are certified against a nonpositive Delta.
      const double lin = accel_ ? 0.0 : std::max(0.0, phi * (1 - tau * L) / 2);
      plan.delta = [G, J, phi, tau, lin](const Vec &nx, const Vec &pv, const Vec &st) {
        double gap = G.eval(nx) + J.eval(nx) - G.eval(st) - J.eval(st);
        return -phi * tau * gap - lin * (nx - pv).squaredNorm();
      };
    } else {
      const double c = accel_ ? 0.0 : std::max(0.0, phi * (1 - tau * L / 2) / 2);
      plan.delta = [c](const Vec &nx, const Vec &pv, const Vec &) { return -c * (nx - pv).squaredNorm(); };
    }
    s_.advance();
    return {std::move(next), std::move(plan)};
  }

private:
  ScalarParams scalars() const {
    ScalarParams sp;
    sp.tau = s_.tau;
    sp.phi = s_.phi;
    return sp;
  }

  std::string name_;
  CompositeProblem p_;
  ScalarSchedule s_;
  bool accel_, value_mode_;
};

void require_zero_G(const CompositeProblem &p, const char *who) {
  if (p.G.name != "zero") throw PreconditionError(std::string(who) + ": requires G = 0");
}

std::unique_ptr<Solver> make_gradient_family(const CompositeProblem &p, double tau0, GradDescOptions opt,
                                             const std::string &name) {
  if (!(tau0 > 0)) throw PreconditionError(name + ": tau0 must be positive");
  const double L = p.J.L;
  ScalarSchedule s;
  s.tau0 = tau0;
  s.L = L;
  if (!opt.accel) {
    s.rule = ScheduleRule::constant;
    s.phi0 = 1;
    const double bound = opt.value_mode ? 1.0 : 2.0;
    if (!opt.force && !(tau0 * L < bound))
      throw PreconditionError(name + " step bound: tau*L = " + num(tau0 * L) + " >= " + num(bound));
  } else {
    const double gamma = opt.gamma >= 0 ? opt.gamma : p.J.gamma;
    if (!(gamma > 0)) throw PreconditionError(name + ": acceleration needs strong convexity gamma > 0");
    if (gamma > p.J.gamma * (1 + 1e-12))
      throw PreconditionError(name + ": acceleration gamma exceeds the strong convexity of J");
    if (!opt.force && !(tau0 * L * L < gamma))
      throw PreconditionError(name + " step bound: tau0*L^2 = " + num(tau0 * L * L) + " >= gamma = " + num(gamma));
    s.rule = ScheduleRule::gd_accel;
    s.gamma = gamma;
    s.tau_from_phi = opt.tau_from_phi;
    s.gamma_factor = opt.value_mode || opt.proof_variant ? 1.0 : 2.0;
    s.phi0 = opt.tau_from_phi ? 1 / (tau0 * tau0) : 1.0;
  }
  s.reset();
  return std::make_unique<ForwardBackward>(name, p, s, opt.accel, opt.value_mode);
}

} // namespace

std::unique_ptr<Solver> make_prox(const CompositeProblem &p, double tau0, double gamma, bool accel) {
  if (!(tau0 > 0)) throw PreconditionError("prox: tau0 must be positive");
  if (accel && !(gamma > 0)) throw PreconditionError("prox: acceleration needs gamma > 0");
  if (accel && gamma > p.G.gamma * (1 + 1e-12))
    throw PreconditionError("prox: acceleration gamma exceeds the strong convexity of G");
  return make_prox_schedule(p, prox_schedule(tau0, gamma, accel));
}

std::unique_ptr<Solver> make_prox_schedule(const CompositeProblem &p, ScalarSchedule schedule, bool value_mode) {
  if (!p.J.is_zero) throw PreconditionError("prox: H must be the subdifferential of G alone (J = 0)");
  const bool accel = schedule.rule != ScheduleRule::constant;
  if (schedule.gamma > p.G.gamma * (1 + 1e-12))
    throw PreconditionError("prox: schedule gamma exceeds the strong convexity of G");
  return std::make_unique<ForwardBackward>(accel ? "prox-accel" : "prox", p, schedule, accel, value_mode);
}

std::unique_ptr<Solver> make_graddesc(const CompositeProblem &p, double tau0, GradDescOptions opt) {
  require_zero_G(p, "graddesc");
  return make_gradient_family(p, tau0, opt, opt.accel ? "graddesc-accel" : "graddesc");
}

std::unique_ptr<Solver> make_fb(const CompositeProblem &p, double tau0, GradDescOptions opt) {
  return make_gradient_family(p, tau0, opt, opt.accel ? "fb-accel" : "fb");
}

// ---------------------------------------------------------------------------

std::optional<double> newton_delta(const SmoothFn &J, const Vec &u, const Vec &u_star) {
  if (!J.hessian_variation) return std::nullopt;
  return J.hessian_variation(u, u_star);
}

namespace {

bool is_diagonal(const Mat &A) {
  Mat off = A;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() == 0;
}

class Newton final : public Solver {
public:
  Newton(CompositeProblem p, bool proximal) : p_(std::move(p)), proximal_(proximal) {}

  std::string name() const override { return proximal_ ? "prox-newton" : "newton"; }
  BlockLayout layout() const override { return BlockLayout::single(p_.dim()); }
  void reset() override { phi_ = 1; }
  LinearMap metric(const Vec &u) const override { return dense(phi_ * p_.J.hess_dense(u)); }
  ScalarParams next_scalars() const override {
    ScalarParams s;
    s.tau = 1;
    s.phi = phi_;
    return s;
  }

  std::pair<Vec, StepPlan> step(const Vec &u, int) override {
    Mat A = p_.J.hess_dense(u);
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0))
      throw PreconditionError("newton: Hessian is not positive definite at the iterate");
    Vec g = p_.J.grad(u);
    Eigen::LDLT<Mat> ldlt(A);
    Vec next;
    Vec gsel;
    if (!proximal_ || p_.G.name == "zero") {
      next = u - ldlt.solve(g);
      gsel = Vec::Zero(u.size());
    } else {
      if (!is_diagonal(A))
        throw PreconditionError("prox-newton: scaled prox needs a diagonal Hessian and separable G");
      Vec v = u - ldlt.solve(g);
      next = p_.G.prox(Vec(A.diagonal().cwiseInverse()), v);
      gsel = -g - A * (next - u);
    }

    const Index n = u.size();
    const double phi = phi_;
    StepPlan plan;
    plan.M = dense(A);
    plan.W = identity(n);
    plan.Z = scaled_identity(n, phi);
    plan.scalars = next_scalars();
    auto J = p_.J;
    plan.vprime = [J, g](const Vec &w) -> Vec { return g - J.grad(w); };
    plan.selection = Vec(gsel + J.grad(next));
    plan.htilde = gsel + g;
    plan.delta = [](const Vec &, const Vec &, const Vec &) { return 0.0; };

    // phi_{i+1} = phi_i (1 + (1-delta_i)^2) lambda_min(H(u+)^{-1} H(u^i)).
    std::optional<double> delta;
    if (p_.known_solution) delta = newton_delta(p_.J, u, *p_.known_solution);
    plan.claims_certificate = delta.has_value();
    if (delta) {
      Mat B = p_.J.hess_dense(next);
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(A, B, Eigen::EigenvaluesOnly);
      double lam = ges.eigenvalues().minCoeff();
      phi_ = phi * (1 + (1 - *delta) * (1 - *delta)) * lam;
    }
    return {std::move(next), std::move(plan)};
  }

  bool claims_certificate() const override { return p_.known_solution.has_value() && p_.J.hessian_variation; }

private:
  CompositeProblem p_;
  bool proximal_;
  double phi_ = 1;
};

} // namespace

std::unique_ptr<Solver> make_newton(const CompositeProblem &p, bool proximal) {
  if (!p.J.hess_dense) throw PreconditionError("newton: J must provide its Hessian");
  if (!proximal && p.G.name != "zero") throw PreconditionError("newton: plain Newton requires G = 0");
  if (proximal && p.G.name != "zero" && !p.G.separable_blocks)
    throw PreconditionError("prox-newton: G must be separable");
  return std::make_unique<Newton>(p, proximal);
}

// ---------------------------------------------------------------------------

namespace {

class KrasnoselskiiMann final : public Solver {
public:
  KrasnoselskiiMann(std::function<Vec(const Vec &)> T, double alpha, Index n) : T_(std::move(T)), alpha_(alpha), n_(n) {}

  std::string name() const override { return "km"; }
  BlockLayout layout() const override { return BlockLayout::single(n_); }
  void reset() override {}
  LinearMap metric(const Vec &) const override { return identity(n_); }

  std::pair<Vec, StepPlan> step(const Vec &u, int) override {
    Vec Tu = T_(u);
    Vec next = Tu;
    StepPlan plan;
    plan.M = plan.W = plan.Z = identity(n_);
    auto T = T_;
    plan.vprime = [T, Tu, u](const Vec &w) -> Vec { return Tu + u - T(w) - w; };
    plan.selection = Vec(T_(next) - next);
    plan.htilde = u - next;
    const double beta = std::max(0.0, 0.5 - alpha_);
    const double c = (alpha_ + 2 * beta - 1) / (2 * (1 - alpha_));
    plan.delta = [c](const Vec &nx, const Vec &pv, const Vec &) { return c * (nx - pv).squaredNorm(); };
    return {std::move(next), std::move(plan)};
  }

private:
  std::function<Vec(const Vec &)> T_;
  double alpha_;
  Index n_;
};

// Iterate (u, v); only v carries state.
class DouglasRachford final : public Solver {
public:
  DouglasRachford(SplitProblem p, double lambda) : p_(std::move(p)), lambda_(lambda) {}

  std::string name() const override { return "dr"; }
  BlockLayout layout() const override { return BlockLayout::from_lengths({p_.dim, p_.dim}); }
  void reset() override {}
  LinearMap metric(const Vec &) const override { return M(); }

  std::pair<Vec, StepPlan> step(const Vec &ub, int) override {
    const Index n = p_.dim;
    Vec v = ub.tail(n);
    Vec u1 = p_.B.resolvent(lambda_, v);
    Vec w = p_.A.resolvent(lambda_, 2 * u1 - v);
    Vec v1 = v + w - u1;
    Vec next(2 * n);
    next << u1, v1;

    // Selections from the operators themselves where available, else from
    // the resolvent identities.
    Vec b = p_.B.apply ? p_.B.apply(u1) : Vec((v - u1) / lambda_);
    Vec a = p_.A.apply ? p_.A.apply(w) : Vec((2 * u1 - v - w) / lambda_);
    StepPlan plan;
    plan.M = M();
    plan.W = identity(2 * n);
    plan.Z = identity(2 * n);
    plan.htilde = Vec(2 * n);
    plan.htilde << lambda_ * b + u1 - v, lambda_ * a + v - u1;
    plan.delta = [n](const Vec &nx, const Vec &pv, const Vec &) { return -0.5 * (nx.tail(n) - pv.tail(n)).squaredNorm(); };
    return {std::move(next), std::move(plan)};
  }

private:
  LinearMap M() const { return block_diag({zero_map(p_.dim, p_.dim), identity(p_.dim)}); }
  SplitProblem p_;
  double lambda_;
};

} // namespace

std::unique_ptr<Solver> make_km(std::function<Vec(const Vec &)> T, double alpha, Index dim) {
  if (!(alpha > 0 && alpha < 1)) throw PreconditionError("km: alpha must lie in (0, 1)");
  return std::make_unique<KrasnoselskiiMann>(std::move(T), alpha, dim);
}

std::unique_ptr<Solver> make_dr(const SplitProblem &p, double lambda) {
  if (!(lambda > 0)) throw PreconditionError("dr: lambda must be positive");
  if (!p.A.resolvent || !p.B.resolvent) throw PreconditionError("dr: closed-form resolvents required");
  return std::make_unique<DouglasRachford>(p, lambda);
}

} // namespace ppm
