#include "ppm/problems.hpp"

#include "ppm/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <memory>

namespace ppm {

double infinity() { return std::numeric_limits<double>::infinity(); }

namespace {

constexpr double kFeasTol = 1e-12;

Vec steps_of(double tau, Index n) { return Vec::Constant(n, tau); }

void check_steps(const Vec &steps, const Vec &x) {
  if (steps.size() != x.size()) throw DimensionError("prox: step vector dimension mismatch");
  if ((steps.array() <= 0).any()) throw std::invalid_argument("prox: steps must be positive");
}

} // namespace

Vec ProxFn::prox(double tau, const Vec &x) const {
  if (!(tau > 0)) throw std::invalid_argument("prox: tau must be positive");
  return prox(steps_of(tau, x.size()), x);
}

Vec ProxFn::prox(const Vec &steps, const Vec &x) const {
  if (x.size() != dim) throw DimensionError("prox: point dimension mismatch in " + name);
  check_steps(steps, x);
  return prox_diag(steps, x);
}

Vec prox_l1(double tau, const Vec &x) {
  if (!(tau > 0)) throw std::invalid_argument("prox_l1: tau must be positive");
  return x.array().sign() * (x.array().abs() - tau).max(0.0);
}

Vec prox_quadratic(double tau, const Vec &x, double gamma) {
  if (!(tau > 0)) throw std::invalid_argument("prox_quadratic: tau must be positive");
  return x / (1 + tau * gamma);
}

ProxFn zero_prox(Index n) {
  ProxFn g;
  g.name = "zero";
  g.dim = n;
  g.eval = [](const Vec &) { return 0.0; };
  g.prox_diag = [](const Vec &, const Vec &x) { return x; };
  g.conj = [](const Vec &y) { return y.lpNorm<Eigen::Infinity>() <= kFeasTol ? 0.0 : infinity(); };
  g.grad = [n](const Vec &) -> Vec { return Vec::Zero(n); };
  g.separable_blocks = BlockLayout::uniform(n, 1);
  return g;
}

ProxFn l1_norm(Index n, double lambda) {
  ProxFn g;
  g.name = "l1";
  g.dim = n;
  g.eval = [lambda](const Vec &x) { return lambda * x.lpNorm<1>(); };
  g.prox_diag = [lambda](const Vec &t, const Vec &x) -> Vec {
    return x.array().sign() * (x.array().abs() - lambda * t.array()).max(0.0);
  };
  g.conj = [lambda](const Vec &y) {
    return y.size() == 0 || y.lpNorm<Eigen::Infinity>() <= lambda * (1 + kFeasTol) ? 0.0 : infinity();
  };
  g.separable_blocks = BlockLayout::uniform(n, 1);
  return g;
}

ProxFn sq_distance(Index n, double gamma, Vec center) {
  if (center.size() != n) throw DimensionError("sq_distance: center dimension");
  auto c = std::make_shared<const Vec>(std::move(center));
  ProxFn g;
  g.name = "sq_distance";
  g.dim = n;
  g.gamma = gamma;
  g.eval = [gamma, c](const Vec &x) { return 0.5 * gamma * (x - *c).squaredNorm(); };
  g.prox_diag = [gamma, c](const Vec &t, const Vec &x) -> Vec {
    return (x.array() + gamma * t.array() * c->array()) / (1 + gamma * t.array());
  };
  g.conj = [gamma, c](const Vec &y) { return y.squaredNorm() / (2 * gamma) + c->dot(y); };
  g.grad = [gamma, c](const Vec &x) -> Vec { return gamma * (x - *c); };
  g.separable_blocks = BlockLayout::uniform(n, 1);
  return g;
}

ProxFn diag_quadratic(Vec d) {
  if ((d.array() < 0).any()) throw std::invalid_argument("diag_quadratic: negative curvature");
  auto D = std::make_shared<const Vec>(std::move(d));
  ProxFn g;
  g.name = "diag_quadratic";
  g.dim = D->size();
  g.gamma = D->size() ? D->minCoeff() : 0.0;
  g.eval = [D](const Vec &x) { return 0.5 * x.dot(D->cwiseProduct(x)); };
  g.prox_diag = [D](const Vec &t, const Vec &x) -> Vec { return x.array() / (1 + t.array() * D->array()); };
  if ((D->array() > 0).all())
    g.conj = [D](const Vec &y) { return 0.5 * (y.array().square() / D->array()).sum(); };
  g.grad = [D](const Vec &x) -> Vec { return D->cwiseProduct(x); };
  g.separable_blocks = BlockLayout::uniform(g.dim, 1);
  return g;
}

ProxFn quad_linear(Index n, double gamma, Vec c) {
  if (c.size() != n) throw DimensionError("quad_linear: linear term dimension");
  if (!(gamma > 0)) throw std::invalid_argument("quad_linear: gamma must be positive");
  auto C = std::make_shared<const Vec>(std::move(c));
  ProxFn g;
  g.name = "quad_linear";
  g.dim = n;
  g.gamma = gamma;
  g.eval = [gamma, C](const Vec &x) { return 0.5 * gamma * x.squaredNorm() + C->dot(x); };
  g.prox_diag = [gamma, C](const Vec &t, const Vec &x) -> Vec {
    return (x.array() - t.array() * C->array()) / (1 + gamma * t.array());
  };
  g.conj = [gamma, C](const Vec &z) { return (z - *C).squaredNorm() / (2 * gamma); };
  g.grad = [gamma, C](const Vec &x) -> Vec { return gamma * x + *C; };
  g.separable_blocks = BlockLayout::uniform(n, 1);
  return g;
}

ProxFn diag_least_squares(Vec a, Vec f) {
  if (a.size() != f.size()) throw DimensionError("diag_least_squares: data dimension");
  auto A = std::make_shared<const Vec>(std::move(a));
  auto F = std::make_shared<const Vec>(std::move(f));
  ProxFn g;
  g.name = "diag_least_squares";
  g.dim = A->size();
  g.gamma = A->size() ? A->array().square().minCoeff() : 0.0;
  g.eval = [A, F](const Vec &x) { return 0.5 * (*F - A->cwiseProduct(x)).squaredNorm(); };
  g.prox_diag = [A, F](const Vec &t, const Vec &x) -> Vec {
    return (x.array() + t.array() * A->array() * F->array()) / (1 + t.array() * A->array().square());
  };
  if ((A->array() != 0).all())
    g.conj = [A, F](const Vec &y) {
      return (0.5 * y.array().square() / A->array().square() + y.array() * F->array() / A->array()).sum();
    };
  g.grad = [A, F](const Vec &x) -> Vec { return A->cwiseProduct(A->cwiseProduct(x) - *F); };
  g.separable_blocks = BlockLayout::uniform(g.dim, 1);
  return g;
}

ProxFn ball_indicator(Index n_points, Index point_dim, double alpha) {
  ProxFn g;
  g.name = "ball_indicator";
  g.dim = n_points * point_dim;
  auto norms = [n_points, point_dim](const Vec &y) {
    Vec r = Vec::Zero(n_points);
    for (Index c = 0; c < point_dim; ++c) r.array() += y.segment(c * n_points, n_points).array().square();
    return Vec(r.array().sqrt());
  };
  g.eval = [norms, alpha](const Vec &y) {
    return y.size() == 0 || norms(y).maxCoeff() <= alpha * (1 + kFeasTol) ? 0.0 : infinity();
  };
  g.prox_diag = [norms, alpha, n_points, point_dim](const Vec &, const Vec &y) -> Vec {
    Vec r = norms(y);
    Vec s = (r.array() > alpha).select(alpha / r.array(), 1.0);
    Vec out = y;
    for (Index c = 0; c < point_dim; ++c) out.segment(c * n_points, n_points).array() *= s.array();
    return out;
  };
  g.conj = [norms, alpha](const Vec &z) { return alpha * norms(z).sum(); };
  return g;
}

SmoothFn zero_smooth(Index n) {
  SmoothFn j;
  j.name = "zero";
  j.dim = n;
  j.eval = [](const Vec &) { return 0.0; };
  j.grad = [n](const Vec &) -> Vec { return Vec::Zero(n); };
  j.hess_apply = [n](const Vec &, const Vec &) -> Vec { return Vec::Zero(n); };
  j.hess_dense = [n](const Vec &) -> Mat { return Mat::Zero(n, n); };
  j.quadratic = Mat::Zero(n, n);
  j.hessian_variation = [](const Vec &, const Vec &) -> std::optional<double> { return 0.0; };
  j.is_zero = true;
  return j;
}

SmoothFn quadratic_smooth(Mat A, Vec c, double constant) {
  if (A.rows() != A.cols() || A.rows() != c.size()) throw DimensionError("quadratic_smooth: dimensions");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  auto Ap = std::make_shared<const Mat>(A);
  auto C = std::make_shared<const Vec>(std::move(c));
  SmoothFn j;
  j.name = "quadratic";
  j.dim = Ap->rows();
  j.L = es.eigenvalues().maxCoeff();
  j.gamma = std::max(0.0, es.eigenvalues().minCoeff());
  j.eval = [Ap, C, constant](const Vec &x) { return 0.5 * x.dot(*Ap * x) - C->dot(x) + constant; };
  j.grad = [Ap, C](const Vec &x) -> Vec { return kernels::matvec_omp(*Ap, x) - *C; };
  j.hess_apply = [Ap](const Vec &, const Vec &d) -> Vec { return *Ap * d; };
  j.hess_dense = [Ap](const Vec &) -> Mat { return *Ap; };
  j.hessian_variation = [](const Vec &, const Vec &) -> std::optional<double> { return 0.0; };
  j.quadratic = std::move(A);
  return j;
}

SmoothFn least_squares(const Mat &A, const Vec &f) {
  Mat AtA = A.transpose() * A;
  SmoothFn j = quadratic_smooth(AtA, A.transpose() * f, 0.5 * f.squaredNorm());
  j.name = "least_squares";
  return j;
}

SmoothFn cosh_sum(Index n, double shift) {
  SmoothFn j;
  j.name = "cosh";
  j.dim = n;
  j.L = infinity();
  j.gamma = 1;
  j.eval = [shift](const Vec &x) { return (x.array() - shift).cosh().sum(); };
  j.grad = [shift](const Vec &x) -> Vec { return (x.array() - shift).sinh(); };
  j.hess_apply = [shift](const Vec &x, const Vec &d) -> Vec { return (x.array() - shift).cosh() * d.array(); };
  j.hess_dense = [shift](const Vec &x) -> Mat { return Vec((x.array() - shift).cosh()).asDiagonal(); };
  // Diagonal Hessian: the ball constraint reduces to per-coordinate intervals
  // |z_k - u*_k| <= r / sqrt(cosh(u*_k - c)), on which cosh is extremal at the ends
  // or at the shift.
  j.hessian_variation = [shift](const Vec &u, const Vec &us) -> std::optional<double> {
    Vec hs = (us.array() - shift).cosh();
    double r = std::sqrt((hs.array() * (u - us).array().square()).sum());
    double delta = 0;
    for (Index k = 0; k < u.size(); ++k) {
      double rho = r / std::sqrt(hs[k]);
      double a = std::abs(us[k] - shift);
      double hmax = std::cosh(a + rho);
      double hmin = std::cosh(std::max(0.0, a - rho));
      double h = std::cosh(u[k] - shift);
      delta = std::max({delta, 1 - hmin / h, hmax / h - 1});
    }
    return delta;
  };
  return j;
}

SmoothFn logistic(const Mat &A) {
  auto Ap = std::make_shared<const Mat>(A);
  Eigen::JacobiSVD<Mat> svd(A);
  SmoothFn j;
  j.name = "logistic";
  j.dim = A.cols();
  double s = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  j.L = 0.25 * s * s;
  j.gamma = 0;
  auto sigm = [](const Vec &t) -> Vec { return (1.0 / (1.0 + (-t.array()).exp())).matrix(); };
  j.eval = [Ap](const Vec &x) {
    Vec t = *Ap * x;
    double v = 0;
    for (Index k = 0; k < t.size(); ++k) v += t[k] > 0 ? t[k] + std::log1p(std::exp(-t[k])) : std::log1p(std::exp(t[k]));
    return v;
  };
  j.grad = [Ap, sigm](const Vec &x) -> Vec { return Ap->transpose() * sigm(*Ap * x); };
  j.hess_apply = [Ap, sigm](const Vec &x, const Vec &d) -> Vec {
    Vec s = sigm(*Ap * x);
    Vec w = s.array() * (1 - s.array());
    return Ap->transpose() * w.cwiseProduct(*Ap * d);
  };
  j.hess_dense = [Ap, sigm](const Vec &x) -> Mat {
    Vec s = sigm(*Ap * x);
    Vec w = s.array() * (1 - s.array());
    return Ap->transpose() * w.asDiagonal() * *Ap;
  };
  return j;
}

double CompositeProblem::fb_residual(const Vec &x, double tau) const {
  return (x - G.prox(tau, x - tau * J.grad(x))).norm();
}

Vec SaddleProblem::join(const Vec &x, const Vec &y) const {
  Vec u(x.size() + y.size());
  u << x, y;
  return u;
}

Vec SaddleProblem::H(const Vec &x, const Vec &y) const {
  if (!G.grad || !Fstar.grad) throw std::logic_error("SaddleProblem::H: G or F* is not differentiable");
  return join(G.grad(x) + J.grad(x) + K.apply_adjoint(y), Fstar.grad(y) - K.apply(x));
}

double SaddleProblem::self_consistency(const Vec &x, const Vec &y) const {
  Vec xr = x - G.prox(1.0, x - J.grad(x) - K.apply_adjoint(y));
  Vec yr = y - Fstar.prox(1.0, y + K.apply(x));
  return std::sqrt(xr.squaredNorm() + yr.squaredNorm());
}

SaddleProblem assemble_saddle(ProxFn G, SmoothFn J, ProxFn Fstar, LinearMap K) {
  if (G.dim != K.dim_in() || J.dim != K.dim_in())
    throw DimensionError("assemble_saddle: K domain does not match G/J dimension");
  if (Fstar.dim != K.dim_out()) throw DimensionError("assemble_saddle: K range does not match F* dimension");
  SaddleProblem p;
  p.name = "saddle";
  p.G = std::move(G);
  p.J = std::move(J);
  p.Fstar = std::move(Fstar);
  p.K = std::move(K);
  // Linear H with quadratic G, F* and no J: the origin is a root.
  if (p.J.is_zero && p.G.grad && p.Fstar.grad) {
    Vec x0 = Vec::Zero(p.nx()), y0 = Vec::Zero(p.ny());
    if (p.H(x0, y0).norm() == 0 && p.G.gamma > 0 && p.Fstar.gamma > 0) p.known_solution = {x0, y0};
  }
  return p;
}

LinearMap grad_op_2d(int nx, int ny) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("grad_op_2d: grid must be at least 2x2");
  const Index n = Index(nx) * ny;
  return LinearMap(
      n, 2 * n,
      [nx, ny, n](const Vec &x) {
        Vec out(2 * n);
        kernels::grad2d_omp(nx, ny, x.data(), out.data());
        return out;
      },
      [nx, ny, n](const Vec &p) {
        Vec out(n);
        kernels::grad2d_adjoint_omp(nx, ny, p.data(), out.data());
        return out;
      },
      MapTag::composite);
}

} // namespace ppm
