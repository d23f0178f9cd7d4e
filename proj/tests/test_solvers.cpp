#include "ppm/certificates.hpp"
#include "ppm/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ppm;

namespace {

CompositeProblem quad_G(double gamma = 1) {
  return std::get<CompositeProblem>(catalog("quadratic", {{"dim", 1}, {"gamma", gamma}}));
}

CompositeProblem quad_J(double gamma, double L, int dim = 2) {
  return std::get<CompositeProblem>(catalog("quadratic", {{"dim", dim}, {"part", "J"}, {"gamma", gamma}, {"L", L}}));
}

// 1-D lasso: G = |.|, J = 1/2 (x - 3)^2.
CompositeProblem lasso_1d() {
  CompositeProblem p;
  p.name = "lasso_1d";
  p.G = l1_norm(1, 1.0);
  p.J = least_squares(Mat::Ones(1, 1), Vec::Constant(1, 3.0));
  p.known_solution = Vec::Constant(1, 2.0);
  return p;
}

} // namespace

TEST(Prox, AcceleratedStepSchedule) {
  auto s = make_prox(quad_G(), 1, 1, true);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 2);
  EXPECT_DOUBLE_EQ(log.plans[0].scalars.tau, 1.0);
  EXPECT_NEAR(log.plans[1].scalars.tau, 1 / std::sqrt(3.0), 1e-15);
}

TEST(Prox, AccelerationNeedsGamma) {
  EXPECT_THROW(make_prox(quad_G(), 1, 0, true), PreconditionError);
}

TEST(Schedule, ProxAccelRecursionsExact) {
  ScalarSchedule s = prox_schedule(1, 0.7, true);
  s.reset();
  for (int i = 0; i < 200; ++i) {
    const double tau = s.tau, phi = s.phi;
    EXPECT_NEAR(tau, 1 / std::sqrt(phi), 1e-14 * tau);
    s.advance();
    EXPECT_NEAR(s.tau, tau / std::sqrt(1 + 2 * 0.7 * tau), 1e-14 * s.tau);
    EXPECT_NEAR(s.phi, phi * (1 + 2 * 0.7 * tau), 1e-14 * s.phi);
  }
}

TEST(Schedule, CpAccelRecursionsExact) {
  const double tau0 = 0.5, sigma0 = 1.5, gamma = 0.8;
  ScalarSchedule s = cp_schedule(tau0, sigma0, gamma);
  s.reset();
  EXPECT_DOUBLE_EQ(s.psi, 1 / (tau0 * sigma0));
  for (int i = 0; i < 200; ++i) {
    const double tau = s.tau, sigma = s.sigma, phi = s.phi, psi = s.psi;
    const double w = 1 / std::sqrt(1 + 2 * gamma * tau);
    EXPECT_NEAR(s.omega, w, 1e-14);
    EXPECT_NEAR(sigma, phi * tau / psi, 1e-12 * sigma);
    s.advance();
    EXPECT_NEAR(s.tau, tau * w, 1e-14 * s.tau);
    EXPECT_NEAR(s.sigma, sigma / w, 1e-14 * s.sigma);
    EXPECT_NEAR(s.phi, phi * (1 + 2 * gamma * tau), 1e-14 * s.phi);
    EXPECT_DOUBLE_EQ(s.psi, psi);
  }
}

TEST(Schedule, GdAccelRecursion) {
  ScalarSchedule s;
  s.rule = ScheduleRule::gd_accel;
  s.tau0 = 0.3;
  s.gamma = 1;
  s.L = 1.5;
  s.phi0 = 1 / (0.3 * 0.3);
  s.reset();
  for (int i = 0; i < 100; ++i) {
    const double tau = s.tau, phi = s.phi;
    EXPECT_NEAR(tau, 1 / std::sqrt(phi), 1e-14 * tau);
    s.advance();
    EXPECT_NEAR(s.phi, phi * (1 + tau * (2 * 1.0 - tau * 1.5 * 1.5)), 1e-14 * s.phi);
  }
}

TEST(GradDesc, StepBounds) {
  auto p = quad_J(1, 4);
  EXPECT_THROW(make_graddesc(p, 0.6), PreconditionError); // tau L = 2.4
  EXPECT_NO_THROW(make_graddesc(p, 0.4));
  GradDescOptions acc;
  acc.accel = true;
  EXPECT_NO_THROW(make_graddesc(quad_J(1, 1), 0.5, acc)); // tau0 L^2 = 0.5 < 1
  EXPECT_THROW(make_graddesc(quad_J(1, 1), 1.0, acc), PreconditionError);
  GradDescOptions forced;
  forced.force = true;
  EXPECT_NO_THROW(make_graddesc(p, 0.75, forced));
}

TEST(GradDesc, OneStepOnUnitQuadratic) {
  auto s = make_graddesc(quad_J(1, 1), 1.0);
  auto log = run(*s, BlockVec(Eigen::Vector2d(2, -3)), 1);
  EXPECT_TRUE(log.iterates[1].isZero());
}

TEST(ForwardBackward, OneDimLassoStep) {
  auto s = make_fb(lasso_1d(), 1.0);
  auto log = run(*s, BlockVec(Vec::Zero(1)), 1);
  EXPECT_DOUBLE_EQ(log.iterates[1][0], 2.0);
}

TEST(ForwardBackward, ReducesToGradDescBitwise) {
  auto p = quad_J(0.5, 3, 4);
  auto a = make_fb(p, 0.5), b = make_graddesc(p, 0.5);
  Vec u0 = Vec::LinSpaced(4, -1, 2);
  auto la = run(*a, BlockVec(u0), 100), lb = run(*b, BlockVec(u0), 100);
  for (std::size_t k = 0; k < la.iterates.size(); ++k) ASSERT_TRUE(la.iterates[k] == lb.iterates[k]);
}

TEST(ForwardBackward, LassoConvergesToReference) {
  auto p = std::get<CompositeProblem>(catalog("lasso"));
  auto s = make_fb(p, 1.0 / p.J.L);
  auto log = run(*s, BlockVec(Vec::Zero(p.dim())), 10000);
  EXPECT_LE((log.iterates.back() - *p.known_solution).norm(), 1e-8);
}

TEST(Newton, CoshFirstStep) {
  auto p = std::get<CompositeProblem>(catalog("cosh_newton"));
  auto s = make_newton(p, false);
  auto log = run(*s, BlockVec(Vec::Constant(1, 0.5)), 1);
  EXPECT_NEAR(log.iterates[1][0], 0.5 - std::tanh(0.5), 1e-15);
  EXPECT_NEAR(log.iterates[1][0], 0.0378828, 1e-7);
}

TEST(Newton, ErrorRatioBoundedNearOneThird) {
  auto p = std::get<CompositeProblem>(catalog("cosh_newton"));
  auto s = make_newton(p, false);
  auto log = run(*s, BlockVec(Vec::Constant(1, 0.5)), 6);
  // x+ = x - tanh x = x^3/3 + O(x^5): the cubic ratio tends to 1/3, so the quadratic one is bounded.
  for (int k = 1; k + 1 < 6; ++k) {
    const double x = log.iterates[k][0], xn = log.iterates[k + 1][0];
    if (std::abs(x) < 1e-5) break;
    EXPECT_LE(std::abs(xn) / (x * x), 0.34);
    EXPECT_NEAR(xn / (x * x * x), 1.0 / 3, 0.01);
  }
}

TEST(Newton, ExactOnQuadraticsAndProximalReduction) {
  auto p = quad_J(1, 5, 3);
  auto s = make_newton(p, false);
  auto log = run(*s, BlockVec(Eigen::Vector3d(1, -2, 3)), 1);
  EXPECT_LE(log.iterates[1].norm(), 1e-15);
  auto c = std::get<CompositeProblem>(catalog("cosh_newton", {{"dim", 2}, {"shift", 0.3}}));
  auto a = make_newton(c, false), b = make_newton(c, true);
  auto la = run(*a, BlockVec(Vec::Constant(2, 0.5)), 6), lb = run(*b, BlockVec(Vec::Constant(2, 0.5)), 6);
  for (std::size_t k = 0; k < la.iterates.size(); ++k) ASSERT_TRUE(la.iterates[k] == lb.iterates[k]);
}

TEST(Newton, ProximalReachesAnalyticSolution) {
  auto p = std::get<CompositeProblem>(catalog("cosh_newton", {{"shift", 1.0}, {"lambda", 0.3}}));
  EXPECT_NEAR((*p.known_solution)[0], 1.0 - std::asinh(0.3), 1e-15);
  auto s = make_newton(p, true);
  auto log = run(*s, BlockVec(Vec::Constant(1, 0.5)), 20);
  EXPECT_NEAR(log.iterates.back()[0], 1.0 - std::asinh(0.3), 1e-14);
}

TEST(KrasnoselskiiMann, AlphaRangeAndFixedPoint) {
  EXPECT_THROW(make_km([](const Vec &u) { return u; }, 1.0, 1), PreconditionError);
  auto s = make_km([](const Vec &u) -> Vec { return 0.5 * u; }, 0.5, 1);
  auto log = run(*s, BlockVec(Vec::Zero(1)), 5);
  EXPECT_TRUE(log.iterates.back().isZero());
}

TEST(KrasnoselskiiMann, AveragedProjectionIsFejer) {
  // T = 1/2 (I + P) with P the projection onto span{(1, 1)}; the distance to the line halves.
  Mat P = 0.5 * Mat::Ones(2, 2);
  auto s = make_km([P](const Vec &u) -> Vec { return 0.5 * (u + P * u); }, 0.5, 2);
  auto log = run(*s, BlockVec(Eigen::Vector2d(3, -1)), 10);
  auto dist = [&](const Vec &u) { return (u - P * u).norm(); };
  for (std::size_t k = 0; k + 1 < log.iterates.size(); ++k)
    EXPECT_NEAR(dist(log.iterates[k + 1]), 0.5 * dist(log.iterates[k]), 1e-14);
}

TEST(DouglasRachford, FejerTowardVStar) {
  auto p = std::get<SplitProblem>(catalog("dr_linear"));
  auto s = make_dr(p, 1.0);
  const double vs = p.v_star(1.0)[0];
  auto log = run(*s, BlockVec(Vec::Constant(2, 4.0), s->layout()), 30);
  for (std::size_t k = 0; k + 1 < log.iterates.size(); ++k)
    EXPECT_LE(std::abs(log.iterates[k + 1][1] - vs), std::abs(log.iterates[k][1] - vs) + 1e-12);
}

TEST(DouglasRachford, ZeroOperatorsStationary) {
  SplitProblem p;
  p.name = "zero";
  p.dim = 1;
  p.A = {"0", [](const Vec &u) -> Vec { return 0 * u; }, [](double, const Vec &v) { return v; }};
  p.B = p.A;
  auto s = make_dr(p, 1.0);
  auto log = run(*s, BlockVec(Vec::Constant(2, 3.0), s->layout()), 3);
  EXPECT_DOUBLE_EQ(log.iterates.back()[1], 3.0);
}

TEST(ChambollePock, InitialisationBound) {
  auto toy = std::get<SaddleProblem>(catalog("saddle_toy"));
  EXPECT_NO_THROW(make_cp(toy, 0.9, 0.9, 0));
  try {
    make_cp(toy, 1.1, 1.1, 0);
    FAIL();
  } catch (const PreconditionError &e) {
    EXPECT_NE(std::string(e.what()).find("1.21"), std::string::npos) << e.what();
  }
}

TEST(ChambollePock, ForwardStepThetaGate) {
  // G = 0, J = 1/2 |x|^2 (L = 1), F* = 1/2 |y|^2, K = 1.
  SaddleProblem p = assemble_saddle(zero_prox(1), quadratic_smooth(Mat::Ones(1, 1), Vec::Zero(1)),
                                    quad_linear(1, 1.0, Vec::Zero(1)), dense(Mat::Ones(1, 1)));
  p.known_solution = std::make_pair(Vec(Vec::Zero(1)), Vec(Vec::Zero(1)));
  CpOptions o;
  o.forward_step = true;
  // theta = 1 - L tau0 / (1 - tau0 sigma0) = 1 - 0.5/0.75 > 0.
  EXPECT_NO_THROW(make_cp(p, 0.5, 0.5, 0, o));
  // theta = 1 - 0.9/0.19 < 0.
  EXPECT_THROW(make_cp(p, 0.9, 0.9, 0, o), PreconditionError);
  o.gap_mode = true; // 1 - 2*0.5/0.75 < 0
  EXPECT_THROW(make_cp(p, 0.5, 0.5, 0, o), PreconditionError);
}

TEST(ChambollePock, ZeroCouplingDecouples) {
  SaddleProblem p = assemble_saddle(sq_distance(2, 1.0, Eigen::Vector2d(1, 2)), zero_smooth(2),
                                    quad_linear(1, 1.0, Vec::Constant(1, -1.0)), zero_map(2, 1));
  auto s = make_cp(p, 0.5, 0.7, 0);
  Vec u0(3);
  u0 << 0, 0, 0;
  auto log = run(*s, BlockVec(u0, s->layout()), 5);
  Vec x = Vec::Zero(2), y = Vec::Zero(1);
  for (int k = 0; k < 5; ++k) {
    x = p.G.prox(0.5, x);
    y = p.Fstar.prox(0.7, y);
  }
  EXPECT_TRUE(log.iterates.back().head(2) == x);
  EXPECT_TRUE(log.iterates.back().tail(1) == y);
}

TEST(ChambollePock, MetricSelfAdjointAndPhiGrowth) {
  auto rof = std::get<SaddleProblem>(catalog("rof", {{"nx", 6}, {"ny", 6}, {"reference_iters", 0}}));
  const double Kn = op_norm(rof.K);
  auto s = make_cp(rof, 0.9 / Kn, 0.9 / Kn, 1.0);
  auto log = run(*s, BlockVec(Vec::Zero(rof.nx() + rof.ny()), s->layout()), 400);
  for (int i : {0, 10, 399}) {
    auto pr = probe_self_adjoint(log.plans[std::size_t(i)].ZM(), 20, 1e-9, 1);
    EXPECT_TRUE(pr.pass) << i << " " << pr.max_deviation;
  }
  // phi_N / phi_0 >= c N^2 with c fitted on N >= 50: the ratio phi_N / N^2 stays bounded below.
  const double phi0 = log.plans[0].scalars.phi;
  double cmin = infinity();
  for (int N = 50; N < 400; ++N) cmin = std::min(cmin, log.plans[std::size_t(N)].scalars.phi / phi0 / (double(N) * N));
  EXPECT_GT(cmin, 1e-3);

  auto u = make_cp(rof, 0.9 / Kn, 0.9 / Kn, 0.0);
  auto lu = run(*u, BlockVec(Vec::Zero(rof.nx() + rof.ny()), u->layout()), 50);
  for (const auto &pl : lu.plans) EXPECT_DOUBLE_EQ(pl.scalars.phi, lu.plans[0].scalars.phi);
}

TEST(Gist, BoundsAndStationarity) {
  // A = I, K = kappa with |kappa| <= 1.
  for (double kappa : {0.5, 1.0}) {
    SaddleProblem p = assemble_saddle(zero_prox(1), least_squares(Mat::Ones(1, 1), Vec::Zero(1)),
                                      ball_indicator(1, 1, 0.5), dense(Mat::Constant(1, 1, kappa)));
    p.known_solution = std::make_pair(Vec(Vec::Zero(1)), Vec(Vec::Zero(1)));
    auto s = make_gist(p);
    auto log = run(*s, BlockVec(Vec::Zero(2), s->layout()), 5);
    EXPECT_TRUE(log.iterates.back().isZero());
  }
  SaddleProblem big = assemble_saddle(zero_prox(1), least_squares(Mat::Constant(1, 1, 1.5), Vec::Zero(1)),
                                      ball_indicator(1, 1, 0.5), dense(Mat::Ones(1, 1)));
  EXPECT_THROW(make_gist(big), PreconditionError);
  GistOptions g;
  g.gap_mode = true;
  SaddleProblem mid = assemble_saddle(zero_prox(1), least_squares(Mat::Constant(1, 1, 1.2), Vec::Zero(1)),
                                      ball_indicator(1, 1, 0.5), dense(Mat::Ones(1, 1)));
  EXPECT_NO_THROW(make_gist(mid));
  EXPECT_THROW(make_gist(mid, g), PreconditionError);
}
