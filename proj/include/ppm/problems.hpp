#pragma once

#include "ppm/linops.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace ppm {

// Closed-form proximable convex function. Steps are componentwise so that
// diagonal step maps (block-separable proxes) go through the same entry point.
struct ProxFn {
  std::string name;
  Index dim = 0;
  std::function<double(const Vec &)> eval;
  std::function<Vec(const Vec &steps, const Vec &x)> prox_diag;
  std::function<double(const Vec &)> conj; // empty when no closed form ships
  std::function<Vec(const Vec &)> grad;    // empty unless differentiable
  double gamma = 0;
  std::optional<BlockLayout> separable_blocks;

  Vec prox(double tau, const Vec &x) const;
  Vec prox(const Vec &steps, const Vec &x) const;
  bool has_conj() const { return static_cast<bool>(conj); }
};

struct SmoothFn {
  std::string name;
  Index dim = 0;
  std::function<double(const Vec &)> eval;
  std::function<Vec(const Vec &)> grad;
  std::function<Vec(const Vec &point, const Vec &dir)> hess_apply; // optional
  std::function<Mat(const Vec &point)> hess_dense;                 // optional
  double L = 0;
  double gamma = 0;
  std::optional<Mat> quadratic; // A when J = 1/2<x,Ax> - <c,x> + const
  std::vector<double> block_L;  // declared per-block constants (non-quadratic J)
  // Smallest delta with (1-delta) H(u) <= H(z) <= (1+delta) H(u) for all z in
  // the H(u*)-ball of radius |u-u*|_{H(u*)} around u*; empty when not closed form.
  std::function<std::optional<double>(const Vec &u, const Vec &u_star)> hessian_variation;
  bool is_zero = false;
};

double infinity();

Vec prox_l1(double tau, const Vec &x);
Vec prox_quadratic(double tau, const Vec &x, double gamma);

ProxFn zero_prox(Index n);
ProxFn l1_norm(Index n, double lambda);
ProxFn sq_distance(Index n, double gamma, Vec center);       // gamma/2 |x-c|^2
ProxFn diag_quadratic(Vec d);                                // 1/2 <x, diag(d) x>
ProxFn quad_linear(Index n, double gamma, Vec c);            // gamma/2 |x|^2 + <c,x>
ProxFn diag_least_squares(Vec a, Vec f);                     // 1/2 |f - diag(a) x|^2
// Pointwise 2-norm balls; component c of point p sits at p + c*n_points.
ProxFn ball_indicator(Index n_points, Index point_dim, double alpha);

SmoothFn zero_smooth(Index n);
SmoothFn quadratic_smooth(Mat A, Vec c, double constant = 0);
SmoothFn least_squares(const Mat &A, const Vec &f);
SmoothFn cosh_sum(Index n, double shift);
SmoothFn logistic(const Mat &A);

struct CompositeProblem {
  std::string name;
  ProxFn G;
  SmoothFn J;
  std::optional<Vec> known_solution;
  double reference_residual = 0;

  Index dim() const { return G.dim; }
  double value(const Vec &x) const { return G.eval(x) + J.eval(x); }
  double fb_residual(const Vec &x, double tau) const;
};

struct SaddleProblem {
  std::string name;
  ProxFn G;
  SmoothFn J;
  ProxFn Fstar;
  LinearMap K;
  std::optional<std::pair<Vec, Vec>> known_solution;

  Index nx() const { return K.dim_in(); }
  Index ny() const { return K.dim_out(); }
  BlockLayout layout() const { return BlockLayout::from_lengths({nx(), ny()}); }
  Vec join(const Vec &x, const Vec &y) const;
  // H(x,y) when G and F* are differentiable.
  Vec H(const Vec &x, const Vec &y) const;
  // Prox fixed-point residual of (x, y) with unit steps.
  double self_consistency(const Vec &x, const Vec &y) const;
  double reference_residual = 0;
};

SaddleProblem assemble_saddle(ProxFn G, SmoothFn J, ProxFn Fstar, LinearMap K);

struct MonotoneOp {
  std::string name;
  std::function<Vec(const Vec &)> apply;                       // single-valued operator
  std::function<Vec(double lambda, const Vec &)> resolvent;    // (I + lambda A)^{-1}
};

// 0 in A(u) + B(u), split for Douglas-Rachford.
struct SplitProblem {
  std::string name;
  Index dim = 0;
  MonotoneOp A, B;
  std::optional<Vec> u_star;
  Vec v_star(double lambda) const { return *u_star + lambda * B.apply(*u_star); }
};

struct FixedPointProblem {
  std::string name;
  Index dim = 0;
  std::function<Vec(const Vec &)> T;
  double alpha = 0.5;
  std::optional<Vec> u_star;
};

using Problem = std::variant<CompositeProblem, SaddleProblem, SplitProblem, FixedPointProblem>;

LinearMap grad_op_2d(int nx, int ny);

struct UnknownProblem : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Known catalog names: quadratic, lasso, rof, cosh_newton, dr_linear, km_linear,
// stoch_lasso, saddle_toy, gist. Unknown params keys are rejected.
Problem catalog(const std::string &name, const nlohmann::json &params = nlohmann::json::object());
std::vector<std::string> catalog_names();

} // namespace ppm
