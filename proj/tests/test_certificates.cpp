#include "ppm/certificates.hpp"
#include "ppm/rng.hpp"
#include "ppm/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace ppm;

namespace {

CompositeProblem prox_toy() { return std::get<CompositeProblem>(catalog("quadratic", {{"dim", 1}, {"gamma", 1.0}})); }

SaddleProblem toy() { return std::get<SaddleProblem>(catalog("saddle_toy")); }

Vec star_of(const SaddleProblem &p) { return p.join(p.known_solution->first, p.known_solution->second); }

TrajectoryLog run_cp_toy(int N, double gamma = 0, bool gap_mode = false) {
  CpOptions o;
  o.gap_mode = gap_mode;
  auto s = make_cp(toy(), 0.9, 0.9, gamma, o);
  return run(*s, BlockVec(Eigen::Vector2d(1, -0.5), s->layout()), N);
}

ThreePointFixture half_square() {
  ThreePointFixture f;
  f.name = "half_square";
  f.J = quadratic_smooth(Mat::Identity(1, 1), Vec::Zero(1));
  f.strongly_convex = true;
  f.c2 = true;
  f.delta = [](const Vec &, const Vec &, const Vec &) { return 0.0; };
  return f;
}

} // namespace

TEST(Qf, ProxToyHandValue) {
  auto s = make_prox(prox_toy(), 1, 0, false);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 1);
  auto r = check_qf(log, Vec::Zero(1));
  ASSERT_EQ(r.residuals.size(), 1u);
  EXPECT_DOUBLE_EQ(r.residuals[0], 0.25);
  EXPECT_TRUE(r.pass());
}

TEST(Ci, ProxToyHandValueBothVariants) {
  auto s = make_prox(prox_toy(), 1, 0, false);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 1);
  EXPECT_DOUBLE_EQ(check_ci(log, Vec::Zero(1), CiVariant::tilde).residuals[0], 0.25);
  EXPECT_DOUBLE_EQ(check_ci(log, Vec::Zero(1), CiVariant::plain).residuals[0], 0.25);
}

TEST(Qf, StationaryStartGivesZero) {
  auto s = make_prox(prox_toy(), 1, 0, false);
  auto log = run(*s, BlockVec(Vec::Zero(1)), 4);
  for (double r : check_qf(log, Vec::Zero(1)).residuals) EXPECT_EQ(r, 0.0);
  for (double r : check_ci(log, Vec::Zero(1)).residuals) EXPECT_EQ(r, 0.0);
}

TEST(Di, ProxToyThreeStepsAndTelescoping) {
  auto s = make_prox(prox_toy(), 1, 0, false);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 3);
  // Per-step slack: u^i = 2^-i, residual_i = 1/2 u_i^2 - 1/2 (u_i/2)^2 - 1/2 (u_i/2)^2 = u_i^2 / 4.
  const double expect = 0.25 * (1 + 0.25 + 0.0625);
  auto di = check_di(log, Vec::Zero(1));
  ASSERT_EQ(di.residuals.size(), 3u);
  EXPECT_NEAR(di.residuals.back(), expect, 1e-15);
  EXPECT_DOUBLE_EQ(di.min_residual, 0.25);
  auto qf = check_qf(log, Vec::Zero(1));
  EXPECT_NEAR(std::accumulate(qf.residuals.begin(), qf.residuals.end(), 0.0), expect, 1e-15);
  EXPECT_LE(std::abs(telescoping_gap(log, Vec::Zero(1))), 1e-12);
}

TEST(Di, AcceleratedProxBoundsPhiWeightedError) {
  auto s = make_prox(prox_toy(), 1, 1, true);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 200);
  const double phi0 = log.plans[0].scalars.phi;
  for (int N = 1; N < 200; ++N) {
    const double phiN = log.plans[std::size_t(N)].scalars.phi;
    EXPECT_LE(phiN / 2 * log.iterates[std::size_t(N)].squaredNorm(), phi0 / 2 * 1.0 + 1e-14);
  }
  EXPECT_TRUE(check_di(log, Vec::Zero(1)).pass());
}

TEST(Qf, CpScalarToy) {
  auto log = run_cp_toy(100);
  const Vec us = star_of(toy());
  auto r = check_qf(log, us);
  EXPECT_GE(r.min_residual, -1e-10 * r.scale);
  EXPECT_LE(std::abs(telescoping_gap(log, us)), 1e-12 * r.scale);
}

TEST(Ci, NewtonOnCoshFromSmallStarts) {
  auto p = std::get<CompositeProblem>(catalog("cosh_newton"));
  for (double x0 : {-0.5, -0.2, 0.1, 0.5}) {
    auto s = make_newton(p, false);
    auto log = run(*s, BlockVec(Vec::Constant(1, x0)), 6);
    auto r = check_ci(log, Vec::Zero(1));
    for (double v : r.residuals) EXPECT_GE(v, 0.0) << x0;
  }
}

TEST(CiGamma, CpScalarToyAndGist) {
  auto log = run_cp_toy(100);
  auto r = check_ci_gamma(log, star_of(toy()), 1.0, 0.0);
  EXPECT_GE(r.min_residual, -1e-10 * r.scale);

  SaddleProblem g = assemble_saddle(zero_prox(1), least_squares(Mat::Ones(1, 1), Vec::Constant(1, 1.0)),
                                    ball_indicator(1, 1, 0.3), dense(Mat::Constant(1, 1, 0.5)));
  // Saddle point: x - 1 + 0.5 y = 0 and 0.5 x in the normal cone of the ball at y.
  // y = -0.3 (active): x = 1.15, 0.5 x > 0 points outward from y = -0.3? no; y = 0.3: x = 0.85.
  g.known_solution = std::make_pair(Vec(Vec::Constant(1, 0.85)), Vec(Vec::Constant(1, 0.3)));
  ASSERT_LE(g.self_consistency(g.known_solution->first, g.known_solution->second), 1e-14);
  auto s = make_gist(g);
  auto lg = run(*s, BlockVec(Vec::Zero(2), s->layout()), 100);
  auto rg = check_ci_gamma(lg, star_of(g), 0.0, g.J.L / 2);
  EXPECT_GE(rg.min_residual, -1e-10 * rg.scale);
}

TEST(Gap, ScalarToyValues) {
  auto p = toy();
  EXPECT_DOUBLE_EQ(gap(p, Vec::Ones(1), Vec::Ones(1)), 1.0);
  EXPECT_DOUBLE_EQ(gap(p, Vec::Zero(1), Vec::Zero(1)), 0.0);
}

TEST(Gap, NonnegativeOnRandomPoints) {
  auto lasso = std::get<SaddleProblem>(catalog("lasso", {{"form", "saddle"}}));
  CounterRng rng(4);
  for (int t = 0; t < 1000; ++t) {
    Vec x(lasso.nx()), y(lasso.ny()), a(1), b(1);
    for (Index k = 0; k < x.size(); ++k) x[k] = 4 * rng.uniform() - 2;
    for (Index k = 0; k < y.size(); ++k) y[k] = 4 * rng.uniform() - 2;
    a[0] = 6 * rng.uniform() - 3;
    b[0] = 6 * rng.uniform() - 3;
    EXPECT_GE(gap(lasso, x, y), -1e-12);
    EXPECT_GE(gap(toy(), a, b), 0.0);
  }
}

TEST(PreliminaryGap, IdentityOnScalarToy) {
  const Vec us = star_of(toy());
  for (double gamma : {0.0, 0.5}) {
    auto log = run_cp_toy(50, gamma, true);
    for (int i = 0; i < log.n_steps(); ++i) {
      const auto &plan = log.plans[std::size_t(i)];
      const Vec &un = log.iterates[std::size_t(i) + 1];
      const double a = preliminary_gap(plan, un, us), b = preliminary_gap_identity_rhs(plan, un, us);
      EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
    }
    EXPECT_DOUBLE_EQ(preliminary_gap(log.plans[0], us, us), 0.0);
  }
}

TEST(PreliminaryGap, SumDominatesErgodicGap) {
  const Vec us = star_of(toy());
  auto log = run_cp_toy(200);
  std::vector<double> zetas;
  auto gaps = ergodic_gaps(log, toy(), us, ErgodicMode::shifted, &zetas);
  double acc = 0;
  for (int i = 0; i < log.n_steps(); ++i) {
    // The shifted point uses steps 1..N-1, so compare with the matching partial sums.
    if (i >= 1) acc += preliminary_gap(log.plans[std::size_t(i)], log.iterates[std::size_t(i) + 1], us);
    if (!std::isnan(gaps[std::size_t(i)])) EXPECT_GE(acc, zetas[std::size_t(i)] * gaps[std::size_t(i)] - 1e-8) << i;
  }
}

TEST(Ergodic, ConstantWeightsGiveMean) {
  auto s = make_prox(prox_toy(), 1, 0, false);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 4);
  auto e = ergodic_point(log, ErgodicMode::value);
  EXPECT_NEAR(e.x[0], (0.5 + 0.25 + 0.125 + 0.0625) / 4, 1e-15);
  EXPECT_DOUBLE_EQ(e.zeta, 4.0);
}

TEST(Ergodic, CpCouplingAndZeta) {
  const int N = 60;
  auto log = run_cp_toy(N);
  const double phi0 = log.plans[0].scalars.phi;
  auto e = ergodic_point(log, ErgodicMode::shifted);
  EXPECT_NEAR(e.zeta, (N - 1) * std::sqrt(phi0), 1e-10 * e.zeta);
  EXPECT_NO_THROW(ergodic_point(run_cp_toy(N, 0.5), ErgodicMode::shifted));
  EXPECT_THROW(ergodic_point(run_cp_toy(N, 0.5), ErgodicMode::plain), std::domain_error);
}

TEST(ValueDi, ProxMonotoneAndStationary) {
  auto p = prox_toy();
  auto s = make_prox_schedule(p, prox_schedule(1, 0, false), true);
  auto log = run(*s, BlockVec(Vec::Ones(1)), 20);
  for (int k = 0; k + 1 < 20; ++k) EXPECT_LT(p.value(log.iterates[std::size_t(k) + 1]), p.value(log.iterates[std::size_t(k)]));
  EXPECT_TRUE(check_value_di(log, p, Vec::Zero(1)).pass());

  auto s0 = make_prox_schedule(p, prox_schedule(1, 0, false), true);
  auto l0 = run(*s0, BlockVec(Vec::Zero(1)), 5);
  for (double r : check_value_di(l0, p, Vec::Zero(1)).residuals) EXPECT_EQ(r, 0.0);
  for (double g : ergodic_value_gaps(l0, p, Vec::Zero(1))) EXPECT_EQ(g, 0.0);
}

TEST(ValueDi, FbLassoErgodicBound) {
  auto p = std::get<CompositeProblem>(catalog("lasso"));
  GradDescOptions o;
  o.value_mode = true;
  auto s = make_fb(p, 0.9 / p.J.L, o);
  const Vec u0 = Vec::Ones(p.dim());
  auto log = run(*s, BlockVec(u0), 500);
  const Vec &us = *p.known_solution;
  auto gaps = ergodic_value_gaps(log, p, us);
  const double phi0 = log.plans[0].scalars.phi;
  double zeta = 0;
  for (int N = 0; N < 500; ++N) {
    zeta += log.plans[std::size_t(N)].scalars.phi * log.plans[std::size_t(N)].scalars.tau;
    EXPECT_LE(gaps[std::size_t(N)], phi0 / (2 * zeta) * (u0 - us).squaredNorm() + 1e-12) << N;
  }
  EXPECT_TRUE(check_value_di(log, p, us).pass());
}

TEST(ThreePoint, HypomonotonicityEqualityCase) {
  auto f = half_square();
  ThreePointSample s{Vec::Zero(1), Vec::Constant(1, -1.0), Vec::Ones(1), Vec::Zero(1), 1.0};
  EXPECT_NEAR(three_point_margin(f, "hypomonotonicity", s), 0.0, 1e-15);
}

TEST(ThreePoint, XEqualsZReducesToMonotonicity) {
  for (const auto &f : three_point_fixtures()) {
    if (!three_point_applicable(f, "hypomonotonicity")) continue;
    CounterRng rng(1);
    for (int t = 0; t < 100; ++t) {
      Vec xs(f.J.dim), x(f.J.dim);
      for (Index k = 0; k < x.size(); ++k) xs[k] = 2 * rng.uniform() - 1, x[k] = 2 * rng.uniform() - 1;
      ThreePointSample s{xs, x, x, x, 1.0};
      EXPECT_GE(three_point_margin(f, "hypomonotonicity", s), -1e-12) << f.name;
    }
  }
}

TEST(ThreePoint, CoshC2Inequalities) {
  for (const auto &f : three_point_fixtures()) {
    if (f.name.rfind("cosh", 0) != 0) continue;
    for (const char *id : {"hypomonotonicity-c2", "smoothness-c2", "hypomonotonicity-c2x", "smoothness-c2x"}) {
      auto r = three_point_suite(f, id, 10000, 3);
      EXPECT_TRUE(r.pass()) << f.name << " " << id << " worst " << r.worst;
    }
  }
}

TEST(ThreePoint, UnknownIdAndMissingConstants) {
  auto f = three_point_fixtures().front();
  EXPECT_THROW(three_point_suite(f, "nope", 10, 1), std::invalid_argument);
  for (const auto &g : three_point_fixtures())
    if (g.name == "logistic") EXPECT_THROW(three_point_suite(g, "hypomonotonicity-c2", 10, 1), std::invalid_argument);
}

TEST(Subspace, ShippedFixtures) {
  for (const auto &f : subspace_fixtures()) {
    auto r = subspace_chain(f, 2000, 9);
    ASSERT_EQ(r.items.size(), 5u);
    if (f.expect_violation) {
      EXPECT_FALSE(r.items[2].pass()) << f.name; // (iii)
      EXPECT_FALSE(r.pass());
    } else {
      EXPECT_TRUE(r.pass()) << f.name;
    }
  }
}

TEST(Subspace, RejectsBadPseudoInverse) {
  auto f = subspace_fixtures().front();
  f.Pplus = 2 * f.P; // P P+ P = 2P
  EXPECT_THROW(subspace_chain(f, 10, 1), std::invalid_argument);
}

TEST(Report, VerdictAndJson) {
  auto r = make_report("QF", {0.5, -1e-12, 0.1}, 10, 3);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.worst_index, 1);
  auto j = r.to_json();
  for (const char *k : {"name", "verdict", "min_residual", "scale", "n_iterations", "worst_index"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_FALSE(make_report("QF", {-1e-6}, 10, 1).pass());
}
