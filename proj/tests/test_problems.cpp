#include "ppm/problems.hpp"
#include "ppm/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ppm;

namespace {

// argmin over a grid of 1/2 (u - x)^2 + tau |u|.
double grid_l1(double tau, double x) {
  double best = 0, bv = infinity();
  for (double u = -5; u <= 5 + 1e-12; u += 1e-4) {
    const double v = 0.5 * (u - x) * (u - x) + tau * std::abs(u);
    if (v < bv) bv = v, best = u;
  }
  return best;
}

Vec fd_grad(const SmoothFn &J, const Vec &x, double h = 1e-6) {
  Vec g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (J.eval(a) - J.eval(b)) / (2 * h);
  }
  return g;
}

std::vector<ProxFn> prox_fixtures() {
  Vec c(3);
  c << 0.5, -1, 2;
  return {zero_prox(3),
          l1_norm(3, 0.7),
          sq_distance(3, 2.0, c),
          diag_quadratic(Eigen::Vector3d(1, 2, 3)),
          quad_linear(3, 1.5, c),
          diag_least_squares(Eigen::Vector3d(0.5, 1, 2), c)};
}

} // namespace

TEST(ProxL1, GridOracle) {
  EXPECT_DOUBLE_EQ(prox_l1(1, Vec::Constant(1, 3.0))[0], 2.0);
  EXPECT_DOUBLE_EQ(prox_l1(1, Vec::Constant(1, 0.5))[0], 0.0);
  EXPECT_DOUBLE_EQ(prox_l1(0.3, Vec::Zero(1))[0], 0.0);
  double worst = 0;
  for (double x = -4; x <= 4; x += 0.37)
    for (double tau : {0.1, 0.5, 1.0, 2.0}) worst = std::max(worst, std::abs(prox_l1(tau, Vec::Constant(1, x))[0] - grid_l1(tau, x)));
  EXPECT_LE(worst, 2e-4);
}

TEST(ProxQuadratic, SpecExamples) {
  EXPECT_DOUBLE_EQ(prox_quadratic(1, Vec::Constant(1, 2.0), 1)[0], 1.0);
  EXPECT_NEAR(prox_quadratic(1e-9, Vec::Constant(1, 2.0), 1)[0], 2.0, 1e-8);
  EXPECT_DOUBLE_EQ(prox_quadratic(1, Vec::Zero(1), 1)[0], 0.0);
}

TEST(ProxFn, OptimalityAgainstPerturbations) {
  CounterRng rng(7);
  std::normal_distribution<double> nd;
  for (const auto &G : prox_fixtures()) {
    for (double tau : {0.3, 1.0, 4.0}) {
      Vec x(3);
      for (Index k = 0; k < 3; ++k) x[k] = 2 * nd(rng);
      Vec u = G.prox(tau, x);
      auto obj = [&](const Vec &v) { return G.eval(v) + 0.5 / tau * (v - x).squaredNorm(); };
      const double f0 = obj(u);
      for (int t = 0; t < 100; ++t) {
        Vec d(3);
        for (Index k = 0; k < 3; ++k) d[k] = 1e-3 * nd(rng);
        EXPECT_LE(f0, obj(u + d) + 1e-10) << G.name;
      }
    }
  }
}

TEST(ProxFn, BlockDiagonalStepEqualsBlockwiseScalarProx) {
  ProxFn G = l1_norm(4, 0.5);
  Vec steps(4), x(4);
  steps << 0.1, 0.1, 2.0, 2.0;
  x << 1, -0.02, 3, -0.5;
  Vec a = G.prox(steps, x);
  Vec b(4);
  b.head(2) = G.prox(0.1, x).head(2);
  b.tail(2) = G.prox(2.0, x).tail(2);
  EXPECT_TRUE(a == b);
}

TEST(ProxFn, ConjugatesSatisfyFenchelYoung) {
  CounterRng rng(9);
  std::normal_distribution<double> nd;
  for (const auto &G : prox_fixtures()) {
    if (!G.has_conj()) continue;
    for (int t = 0; t < 50; ++t) {
      Vec x(3), y(3);
      for (Index k = 0; k < 3; ++k) x[k] = nd(rng), y[k] = nd(rng);
      const double fy = G.conj(y);
      if (std::isfinite(fy)) EXPECT_GE(G.eval(x) + fy, x.dot(y) - 1e-10) << G.name;
    }
  }
}

TEST(SmoothFn, GradientsAndHessiansMatchFiniteDifferences) {
  CounterRng rng(13);
  std::normal_distribution<double> nd;
  Mat A(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) A(i, j) = nd(rng);
  Mat S = A.transpose() * A + Mat::Identity(3, 3);
  std::vector<SmoothFn> fns = {quadratic_smooth(S, Eigen::Vector3d(1, 0, -1)), least_squares(A, Vec::Ones(4)),
                               cosh_sum(3, 0.2), logistic(A)};
  for (const auto &J : fns) {
    for (int t = 0; t < 20; ++t) {
      Vec x(3);
      for (Index k = 0; k < 3; ++k) x[k] = nd(rng);
      Vec g = J.grad(x), fd = fd_grad(J, x);
      EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm())) << J.name;
      if (J.hess_apply) {
        Vec d(3);
        for (Index k = 0; k < 3; ++k) d[k] = nd(rng);
        const double h = 1e-6;
        Vec hd = (J.grad(x + h * d) - J.grad(x - h * d)) / (2 * h);
        Vec ha = J.hess_apply(x, d);
        EXPECT_LE((ha - hd).norm(), 1e-5 * std::max(1.0, ha.norm())) << J.name;
      }
    }
  }
}

TEST(AssembleSaddle, ScalarToySolutionAndDimensionCheck) {
  SaddleProblem s = std::get<SaddleProblem>(catalog("saddle_toy"));
  ASSERT_TRUE(s.known_solution);
  EXPECT_DOUBLE_EQ(s.known_solution->first[0], 0.0);
  EXPECT_DOUBLE_EQ(s.known_solution->second[0], 0.0);
  EXPECT_LE(s.self_consistency(Vec::Zero(1), Vec::Zero(1)), 1e-15);
  EXPECT_THROW(assemble_saddle(zero_prox(2), zero_smooth(2), zero_prox(3), dense(Mat::Ones(2, 2))), DimensionError);
}

TEST(AssembleSaddle, LassoSaddleMatchesComposite) {
  auto c = std::get<CompositeProblem>(catalog("lasso"));
  auto s = std::get<SaddleProblem>(catalog("lasso", {{"form", "saddle"}}));
  ASSERT_TRUE(c.known_solution && s.known_solution);
  EXPECT_LE((*c.known_solution - s.known_solution->first).norm(), 1e-12);
  EXPECT_LE(s.reference_residual, 1e-7);

  // Independent oracle: plain FB for 1e5 iterations from zero.
  const double tau = 1 / c.J.L;
  Vec x = Vec::Zero(c.dim());
  for (int k = 0; k < 100000; ++k) x = c.G.prox(tau, x - tau * c.J.grad(x));
  EXPECT_LE((x - *c.known_solution).norm(), 1e-8);
}

TEST(Catalog, KnownSolutionsSatisfyTheirResiduals) {
  for (const auto &name : catalog_names()) {
    Problem p = catalog(name);
    if (auto *c = std::get_if<CompositeProblem>(&p)) {
      ASSERT_TRUE(c->known_solution) << name;
      const double tau = std::isfinite(c->J.L) ? 1 / std::max(c->J.L, 1.0) : 1.0;
      EXPECT_LE(c->fb_residual(*c->known_solution, tau), 1e-8) << name;
    } else if (auto *s = std::get_if<SaddleProblem>(&p)) {
      ASSERT_TRUE(s->known_solution) << name;
      EXPECT_LE(s->self_consistency(s->known_solution->first, s->known_solution->second), 1e-10) << name;
    }
  }
}

TEST(Catalog, SpecExamples) {
  auto cosh = std::get<CompositeProblem>(catalog("cosh_newton"));
  EXPECT_EQ(cosh.dim(), 1);
  EXPECT_DOUBLE_EQ((*cosh.known_solution)[0], 0.0);
  EXPECT_DOUBLE_EQ(cosh.J.grad(Vec::Zero(1))[0], 0.0);

  auto dr = std::get<SplitProblem>(catalog("dr_linear", {{"a", 0.0}, {"b", 2.0}}));
  EXPECT_DOUBLE_EQ((*dr.u_star)[0], 1.0);
  // A(u*) + B(u*) = 0.
  EXPECT_DOUBLE_EQ(dr.A.apply(*dr.u_star)[0] + dr.B.apply(*dr.u_star)[0], 0.0);

  auto q = std::get<CompositeProblem>(catalog("quadratic", {{"gamma", 1.0}}));
  EXPECT_TRUE(q.known_solution->isZero());
}

TEST(Catalog, StrictParameters) {
  EXPECT_THROW(catalog("nope"), std::invalid_argument);
  EXPECT_THROW(catalog("quadratic", {{"gamma", 1.0}, {"typo", 1}}), std::invalid_argument);
  EXPECT_THROW(catalog("quadratic", {{"gamma", "one"}}), std::invalid_argument);
}

TEST(GradOp2d, ImpulseResponseAndAdjoint) {
  LinearMap K = grad_op_2d(3, 3);
  EXPECT_EQ(K.dim_out(), 18);
  Vec x = Vec::Zero(9);
  x[0] = 1; // corner pixel
  Vec g = K.apply(x);
  // d_x at (0,0) is x(1,0)-x(0,0) = -1, d_y at (0,0) is -1; nothing else.
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[9], -1.0);
  EXPECT_DOUBLE_EQ(g.cwiseAbs().sum(), 2.0);
}
