#include "ppm/stochastic.hpp"

#include "ppm/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace ppm {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Vec coord_weights(const BlockLayout &layout, const std::vector<std::size_t> &S, const Vec &pi, bool inverse) {
  Vec w = Vec::Zero(layout.total());
  for (std::size_t j : S) w.segment(layout[j].offset, layout[j].length).setConstant(inverse ? 1 / pi[Index(j)] : 1.0);
  return w;
}

std::vector<Index> coords_of(const BlockLayout &layout, const std::vector<std::size_t> &S) {
  std::vector<Index> c;
  for (std::size_t j : S)
    for (Index k = 0; k < layout[j].length; ++k) c.push_back(layout[j].offset + k);
  return c;
}

Mat principal(const Mat &A, const std::vector<Index> &c) {
  Mat B(Index(c.size()), Index(c.size()));
  for (std::size_t a = 0; a < c.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b) B(Index(a), Index(b)) = A(c[a], c[b]);
  return B;
}

} // namespace

SamplingScheme parse_scheme(const std::string &s) {
  if (s == "independent" || s == "independent-inclusion") return SamplingScheme::independent;
  if (s == "uniform" || s == "uniform-single-block") return SamplingScheme::uniform_single;
  if (s == "full") return SamplingScheme::full;
  throw std::invalid_argument("unknown sampling scheme '" + s + "'");
}

std::string to_string(SamplingScheme s) {
  switch (s) {
  case SamplingScheme::independent:
    return "independent-inclusion";
  case SamplingScheme::uniform_single:
    return "uniform-single-block";
  case SamplingScheme::full:
    return "full";
  }
  return "?";
}

Vec BlockSampler::probabilities(int i) const {
  const Index m = Index(layout.size());
  switch (scheme) {
  case SamplingScheme::full:
    return Vec::Ones(m);
  case SamplingScheme::uniform_single:
    return Vec::Constant(m, 1.0 / double(m));
  case SamplingScheme::independent: {
    Vec p = pi_at ? pi_at(i) : pi;
    if (p.size() != m) throw DimensionError("sampler: one probability per block required");
    if ((p.array() <= 0).any() || (p.array() > 1).any())
      throw std::invalid_argument("sampler: probabilities must lie in (0, 1]");
    return p;
  }
  }
  return pi;
}

BlockSampler BlockSampler::for_replicate(std::uint64_t r) const {
  BlockSampler b = *this;
  CounterRng rng(rng_seed, r);
  b.rng_seed = rng();
  return b;
}

BlockSampler make_sampler(BlockLayout layout, SamplingScheme scheme, Vec pi, std::uint64_t seed) {
  if (layout.size() == 0) throw std::invalid_argument("sampler: layout has no blocks");
  BlockSampler b;
  b.layout = std::move(layout);
  b.scheme = scheme;
  b.rng_seed = seed;
  if (scheme == SamplingScheme::independent) {
    if (pi.size() == 1 && b.m() > 1) pi = Vec::Constant(Index(b.m()), pi[0]);
    b.pi = std::move(pi);
    b.probabilities(0);
  }
  return b;
}

BlockSampler make_sampler(BlockLayout layout, SamplingScheme scheme, double pi, std::uint64_t seed) {
  return make_sampler(std::move(layout), scheme, Vec::Constant(1, pi), seed);
}

SampledStep sample(const BlockSampler &sampler, int i) {
  SampledStep st;
  st.pi = sampler.probabilities(i);
  const std::size_t m = sampler.m();
  CounterRng rng(sampler.rng_seed, std::uint64_t(i));
  switch (sampler.scheme) {
  case SamplingScheme::full:
    for (std::size_t j = 0; j < m; ++j) st.S.push_back(j);
    break;
  case SamplingScheme::uniform_single:
    st.S.push_back(std::min<std::size_t>(m - 1, std::size_t(rng.uniform() * double(m))));
    break;
  case SamplingScheme::independent:
    for (;;) {
      for (std::size_t j = 0; j < m; ++j)
        if (rng.uniform() < st.pi[Index(j)]) st.S.push_back(j);
      if (!st.S.empty()) break;
      ++st.resamples;
    }
    break;
  }
  st.mask = coord_weights(sampler.layout, st.S, st.pi, false);
  st.weights = coord_weights(sampler.layout, st.S, st.pi, true);
  st.P_S = block_projection(sampler.layout, st.S);
  st.Pi_S = diagonal(st.weights);
  return st;
}

double blockwise_L(const SmoothFn &J, const BlockLayout &layout, const std::vector<std::size_t> &S, const Vec &pi) {
  if (J.is_zero) return 0;
  if (J.quadratic) {
    auto c = coords_of(layout, S);
    Mat B = principal(*J.quadratic, c);
    Vec s(Index(c.size()));
    Index k = 0;
    for (std::size_t j : S)
      for (Index t = 0; t < layout[j].length; ++t) s[k++] = 1 / std::sqrt(pi[Index(j)]);
    Mat W = s.asDiagonal() * B * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    return std::max(0.0, es.eigenvalues().maxCoeff());
  }
  if (J.block_L.size() != layout.size())
    throw std::invalid_argument("blockwise_L: " + J.name + " is not quadratic and declares no per-block constants");
  double worst = 0;
  for (std::size_t j : S) worst = std::max(worst, J.block_L[j] / pi[Index(j)]);
  return double(S.size()) * worst;
}

Mat projection_matrix(const BlockLayout &layout, const std::vector<std::size_t> &S) {
  Vec d = Vec::Zero(layout.total());
  for (Index c : coords_of(layout, S)) d[c] = 1;
  return d.asDiagonal();
}

Mat sampled_pinv(const Mat &A, const BlockLayout &layout, const std::vector<std::size_t> &S) {
  auto c = coords_of(layout, S);
  Mat B = principal(A, c);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (B + B.transpose()));
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1e-300)))
    throw PreconditionError("stochastic newton: sampled Hessian block is singular or indefinite");
  Mat Binv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  Mat out = Mat::Zero(A.rows(), A.cols());
  for (std::size_t a = 0; a < c.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b) out(c[a], c[b]) = Binv(Index(a), Index(b));
  return out;
}

double pinv_identity_residual(const Mat &A, const Mat &Aplus, const Mat &P) {
  Mat AS = P * A * P;
  double r = (AS * Aplus - P).cwiseAbs().maxCoeff();
  r = std::max(r, (Aplus * AS - P).cwiseAbs().maxCoeff());
  r = std::max(r, (Aplus - P * Aplus * P).cwiseAbs().maxCoeff());
  return r;
}

Mat expected_complement(const Mat &H, const BlockSampler &sampler, int i) {
  const auto &layout = sampler.layout;
  const std::size_t m = sampler.m();
  Vec pi = sampler.probabilities(i);
  Mat E = Mat::Zero(H.rows(), H.cols());
  if (sampler.scheme == SamplingScheme::full) return E;
  if (sampler.scheme == SamplingScheme::uniform_single) {
    for (std::size_t j = 0; j < m; ++j) {
      Mat Q = Mat::Identity(H.rows(), H.cols()) - projection_matrix(layout, {j});
      E += Q * H * Q;
    }
    return E / double(m);
  }
  // Independent inclusion: entry (k, l) survives with probability P[k, l both unsampled].
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      double q = a == b ? 1 - pi[Index(a)] : (1 - pi[Index(a)]) * (1 - pi[Index(b)]);
      E.block(layout[a].offset, layout[b].offset, layout[a].length, layout[b].length) =
          q * H.block(layout[a].offset, layout[b].offset, layout[a].length, layout[b].length);
    }
  return E;
}

double pbar(const Mat &H, const BlockSampler &sampler, int i) {
  Mat E = expected_complement(H, sampler, i);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(0.5 * (E + E.transpose()), 0.5 * (H + H.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double v = 1 - ges.eigenvalues().maxCoeff();
  return std::abs(v) < 1e-12 ? 0.0 : v;
}

std::optional<double> delta_J(const SmoothFn &J) {
  if (J.quadratic) return 0.0;
  return std::nullopt;
}

double snewton_kappa(double p, double d) { return (1 + p - 3 * d + d * d) / (1 - d * d); }
double snewton_delta_bound(double p) { return (3 - std::sqrt(9 - 8 * p)) / 4; }

namespace {

class StochasticFB final : public Solver {
public:
  StochasticFB(CompositeProblem p, BlockSampler s, double tau, bool force)
      : p_(std::move(p)), s_(std::move(s)), tau_(tau), force_(force) {}

  std::string name() const override { return p_.G.name == "zero" ? "sgd" : "sfb"; }
  BlockLayout layout() const override { return s_.layout; }
  void reset() override { resampled_ = 0; }
  LinearMap metric(const Vec &) const override { return identity(p_.dim()); }
  ScalarParams next_scalars() const override {
    ScalarParams sp;
    sp.tau = tau_;
    sp.phi = 1;
    return sp;
  }
  bool claims_certificate() const override { return s_.scheme == SamplingScheme::full; }
  int resampled() const override { return resampled_; }

  std::pair<Vec, StepPlan> step(const Vec &u, int i) override {
    SampledStep st = sample(s_, i);
    resampled_ += st.resamples;
    if (!force_) check_bound(st.S, st.pi, tau_);
    const bool smooth = !p_.J.is_zero;
    const Index n = u.size();
    Vec g = smooth ? p_.J.grad(u) : Vec::Zero(n);
    // Coordinates outside S get the plain step so the prox stays well-defined; they are discarded.
    Vec steps = (st.mask.array() > 0).select(tau_ * st.weights.array(), tau_);
    Vec v = smooth ? Vec(u - steps.cwiseProduct(g)) : u;
    Vec prox = p_.G.prox(steps, v);
    Vec next = (st.mask.array() > 0).select(prox, u);

    StepPlan plan;
    plan.M = identity(n);
    plan.W = diagonal(tau_ * st.weights);
    plan.Z = identity(n);
    plan.scalars = next_scalars();
    Vec gnext = smooth ? p_.J.grad(next) : Vec::Zero(n);
    Vec gsel = (st.mask.array() > 0).select((v - next).cwiseQuotient(steps), 0.0);
    plan.selection = Vec(gsel + gnext);
    LinearMap W = plan.W;
    if (smooth) {
      auto J = p_.J;
      plan.vprime = [J, g, W](const Vec &w) -> Vec { return W.apply(g - J.grad(w)); };
    } else {
      plan.vprime = [n](const Vec &) -> Vec { return Vec::Zero(n); };
    }
    plan.htilde = W.apply(*plan.selection) + plan.vprime(next);
    plan.delta = [](const Vec &, const Vec &, const Vec &) { return 0.0; };
    plan.claims_certificate = claims_certificate();
    return {std::move(next), std::move(plan)};
  }

  void check_bound(const std::vector<std::size_t> &S, const Vec &pi, double tau) const {
    const double LS = blockwise_L(p_.J, s_.layout, S, pi);
    for (std::size_t j : S)
      if (tau * LS > pi[Index(j)] * (1 + 1e-12))
        throw PreconditionError("stochastic step bound: tau*L_S = " + num(tau * LS) + " > pi_j = " +
                                num(pi[Index(j)]) + " for block " + std::to_string(j));
  }

private:
  CompositeProblem p_;
  BlockSampler s_;
  double tau_;
  bool force_;
  int resampled_ = 0;
};

class StochasticNewton final : public Solver {
public:
  StochasticNewton(CompositeProblem p, BlockSampler s, bool proximal, double kappa, double phi0, bool claims)
      : p_(std::move(p)), s_(std::move(s)), proximal_(proximal), kappa_(kappa), phi0_(phi0), claims_(claims) {
    reset();
  }

  std::string name() const override { return proximal_ ? "sprox-newton" : "snewton"; }
  BlockLayout layout() const override { return s_.layout; }
  void reset() override {
    phi_ = phi0_;
    resampled_ = 0;
  }
  LinearMap metric(const Vec &u) const override { return dense(phi_ * p_.J.hess_dense(u)); }
  ScalarParams next_scalars() const override {
    ScalarParams sp;
    sp.tau = 1;
    sp.phi = phi_;
    return sp;
  }
  bool claims_certificate() const override { return claims_; }
  int resampled() const override { return resampled_; }

  std::pair<Vec, StepPlan> step(const Vec &u, int i) override {
    SampledStep st = sample(s_, i);
    resampled_ += st.resamples;
    const Index n = u.size();
    Mat A = p_.J.hess_dense(u);
    Mat Aplus = sampled_pinv(A, s_.layout, st.S);
    Mat P = projection_matrix(s_.layout, st.S);
    const double res = pinv_identity_residual(A, Aplus, P);
    if (!(res <= 1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff() * Aplus.cwiseAbs().maxCoeff())))
      throw PreconditionError("stochastic newton: pseudo-inverse identities fail, residual " + num(res));
    Vec g = p_.J.grad(u);
    Vec v = u - Aplus * g;
    Vec next = v;
    Vec gsel = Vec::Zero(n);
    if (proximal_ && p_.G.name != "zero") {
      Vec steps = A.diagonal().cwiseInverse();
      Vec prox = p_.G.prox(steps, v);
      next = (st.mask.array() > 0).select(prox, u);
      gsel = (st.mask.array() > 0).select((v - next).cwiseProduct(A.diagonal()), 0.0);
    }

    StepPlan plan;
    plan.M = dense(A);
    plan.W = st.P_S;
    plan.Z = scaled_identity(n, phi_);
    plan.scalars = next_scalars();
    auto J = p_.J;
    Mat C = (Mat::Identity(n, n) - P) * A * P;
    plan.vprime = [J, g, C, P, u](const Vec &w) -> Vec { return -C * (w - u) + P * (g - J.grad(w)); };
    plan.selection = Vec(gsel + J.grad(next));
    plan.htilde = P * (*plan.selection) + plan.vprime(next);
    plan.delta = [](const Vec &, const Vec &, const Vec &) { return 0.0; };
    plan.claims_certificate = claims_;
    phi_ *= kappa_;
    return {std::move(next), std::move(plan)};
  }

private:
  CompositeProblem p_;
  BlockSampler s_;
  bool proximal_;
  double kappa_, phi0_;
  bool claims_;
  double phi_ = 1;
  int resampled_ = 0;
};

bool is_diagonal(const Mat &A) {
  Mat off = A;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() == 0;
}

} // namespace

double sgd_max_step(const SmoothFn &J, const BlockSampler &sampler) {
  const std::size_t m = sampler.m();
  const Vec pi = sampler.probabilities(0);
  std::vector<std::vector<std::size_t>> sets;
  if (sampler.scheme == SamplingScheme::uniform_single) {
    for (std::size_t j = 0; j < m; ++j) sets.push_back({j});
  } else {
    sets.emplace_back(m);
    for (std::size_t j = 0; j < m; ++j) sets.back()[j] = j;
  }
  double best = infinity();
  for (const auto &S : sets) {
    const double LS = blockwise_L(J, sampler.layout, S, pi);
    if (LS <= 0) continue;
    for (std::size_t j : S) best = std::min(best, pi[Index(j)] / LS);
  }
  return best;
}

std::unique_ptr<Solver> make_sgd(const CompositeProblem &p, BlockSampler sampler, double tau, bool force) {
  if (!(tau > 0)) throw PreconditionError("sgd: tau must be positive");
  if (sampler.layout.total() != p.dim()) throw DimensionError("sgd: sampler layout does not match the problem");
  if (p.G.name != "zero") {
    if (!p.G.separable_blocks) throw PreconditionError("sfb: G must be block-separable");
    // Every sampler block must be a union of the separable blocks of G.
    for (const auto &b : sampler.layout.blocks()) {
      bool start = false, end = false;
      for (const auto &c : p.G.separable_blocks->blocks()) {
        start = start || c.offset == b.offset;
        end = end || c.offset + c.length == b.offset + b.length;
      }
      if (!start || !end) throw PreconditionError("sfb: sampler blocks split a separable block of G");
    }
  }
  auto s = std::make_unique<StochasticFB>(p, sampler, tau, force);
  if (!force) {
    // The bound is monotone in S for the shipped schemes: full set, or each single block.
    const std::size_t m = sampler.m();
    Vec pi = sampler.probabilities(0);
    if (sampler.scheme == SamplingScheme::uniform_single) {
      for (std::size_t j = 0; j < m; ++j) s->check_bound({j}, pi, tau);
    } else {
      std::vector<std::size_t> all(m);
      for (std::size_t j = 0; j < m; ++j) all[j] = j;
      s->check_bound(all, pi, tau);
    }
  }
  return s;
}

std::unique_ptr<Solver> make_snewton(const CompositeProblem &p, BlockSampler sampler, bool proximal) {
  if (!p.J.hess_dense) throw PreconditionError("stochastic newton: J must provide its Hessian");
  if (sampler.layout.total() != p.dim()) throw DimensionError("stochastic newton: sampler layout does not match");
  if (!proximal && p.G.name != "zero") throw PreconditionError("stochastic newton: plain variant requires G = 0");
  if (proximal && p.G.name != "zero") {
    if (!p.G.separable_blocks) throw PreconditionError("stochastic prox-newton: G must be separable");
    if (!p.J.quadratic || !is_diagonal(*p.J.quadratic))
      throw PreconditionError("stochastic prox-newton: scaled prox needs a diagonal Hessian");
  }
  double kappa = 1, phi0 = 1;
  bool claims = false;
  if (auto d = delta_J(p.J)) {
    const double pb = pbar(*p.J.quadratic, sampler);
    if (pb > 0 && *d < snewton_delta_bound(pb)) {
      kappa = snewton_kappa(pb, *d);
      phi0 = 1 / (1 - *d);
      claims = true;
    }
  }
  return std::make_unique<StochasticNewton>(p, sampler, proximal, kappa, phi0, claims);
}

Statistic named_statistic(const std::string &name) {
  using R = IterRecord;
  double R::*field = nullptr;
  if (name == "err_sq") field = &R::err_sq;
  else if (name == "metric_err_sq") field = &R::metric_err_sq;
  else if (name == "step_sq") field = &R::step_sq;
  else if (name == "gap") field = &R::gap;
  else if (name == "value_gap") field = &R::value_gap;
  else if (name == "ci_residual") field = &R::ci_residual;
  else if (name == "qf_residual") field = &R::qf_residual;
  else if (name == "inclusion") field = &R::inclusion;
  else throw std::invalid_argument("unknown statistic '" + name + "'");
  return [field](const TrajectoryLog &log, int k) { return log.records[std::size_t(k)].*field; };
}

McResult mc_expectation(const RunFactory &factory, int replicates, const Statistic &stat, bool keep_logs) {
  if (replicates < 2) throw std::invalid_argument("mc_expectation: at least two replicates required");
  std::vector<std::vector<double>> values(static_cast<std::size_t>(replicates));
  std::vector<TrajectoryLog> logs(keep_logs ? static_cast<std::size_t>(replicates) : 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replicates));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < replicates; ++r) {
    try {
      TrajectoryLog log = factory(std::uint64_t(r));
      auto &v = values[std::size_t(r)];
      v.resize(log.records.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = stat(log, int(k));
      if (keep_logs) logs[std::size_t(r)] = std::move(log);
    } catch (...) {
      errors[std::size_t(r)] = std::current_exception();
    }
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
  const std::size_t K = values[0].size();
  for (const auto &v : values)
    if (v.size() != K) throw std::runtime_error("mc_expectation: replicates have different lengths");
  McResult out;
  out.replicates = replicates;
  out.mean.assign(K, 0.0);
  out.std_error.assign(K, 0.0);
  for (const auto &v : values)
    for (std::size_t k = 0; k < K; ++k) out.mean[k] += v[k];
  for (auto &m : out.mean) m /= replicates;
  for (const auto &v : values)
    for (std::size_t k = 0; k < K; ++k) out.std_error[k] += (v[k] - out.mean[k]) * (v[k] - out.mean[k]);
  for (auto &s : out.std_error) s = std::sqrt(s / (replicates - 1) / replicates);
  out.logs = std::move(logs);
  return out;
}

} // namespace ppm
