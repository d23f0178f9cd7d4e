#include "ppm/problems.hpp"
#include "ppm/rng.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>

namespace ppm {

namespace {

// Strict parameter reader: every key must be consumed.
class Params {
public:
  Params(std::string problem, const nlohmann::json &j) : problem_(std::move(problem)), j_(j) {
    if (!j_.is_null() && !j_.is_object()) throw std::invalid_argument("catalog " + problem_ + ": params must be an object");
  }

  template <class T> T get(const std::string &key, T def) {
    used_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return def;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
      throw std::invalid_argument("catalog " + problem_ + ": parameter '" + key + "' has the wrong type");
    }
  }

  void finish() const {
    if (j_.is_null()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw std::invalid_argument("catalog " + problem_ + ": unknown parameter '" + it.key() + "'");
  }

private:
  std::string problem_;
  const nlohmann::json &j_;
  std::set<std::string> used_;
};

Mat gaussian(Index rows, Index cols, std::uint64_t seed, std::uint64_t stream, double scale) {
  CounterRng rng(seed, stream);
  std::normal_distribution<double> nd;
  Mat A(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) A(r, c) = scale * nd(rng);
  return A;
}

void positive(double v, const char *what) {
  if (!(v > 0)) throw std::invalid_argument(std::string("catalog: ") + what + " must be positive");
}

// Lasso-type reference: forward-backward to stagnation, then an exact solve on
// the detected support with fixed signs.
Vec lasso_reference(const CompositeProblem &p, const Mat &A, const Vec &f, double lambda) {
  const Index n = A.cols();
  const double tau = 1 / std::max(p.J.L, 1e-12);
  Vec x = Vec::Zero(n);
  for (int k = 0; k < 100000; ++k) {
    Vec x1 = p.G.prox(tau, x - tau * p.J.grad(x));
    double d = (x1 - x).norm();
    x = std::move(x1);
    if (d <= 1e-15 * std::max(1.0, x.norm())) break;
  }
  std::vector<Index> S;
  for (Index k = 0; k < n; ++k)
    if (std::abs(x[k]) > 1e-9) S.push_back(k);
  if (!S.empty()) {
    Mat AS(A.rows(), Index(S.size()));
    Vec s(Index(S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) {
      AS.col(Index(k)) = A.col(S[k]);
      s[Index(k)] = x[S[k]] > 0 ? 1.0 : -1.0;
    }
    Vec xs = (AS.transpose() * AS).ldlt().solve(AS.transpose() * f - lambda * s);
    Vec cand = Vec::Zero(n);
    bool signs_ok = true;
    for (std::size_t k = 0; k < S.size(); ++k) {
      cand[S[k]] = xs[Index(k)];
      signs_ok = signs_ok && xs[Index(k)] * s[Index(k)] > 0;
    }
    if (signs_ok && p.fb_residual(cand, tau) <= p.fb_residual(x, tau)) x = cand;
  }
  return x;
}

// Accelerated primal-dual iteration used only to produce reference saddle points.
std::pair<Vec, Vec> cp_reference(const SaddleProblem &p, double gamma, int iters) {
  const double Kn = op_norm(p.K);
  double tau = 0.99 / Kn, sigma = 0.99 / Kn;
  Vec x = Vec::Zero(p.nx()), y = Vec::Zero(p.ny());
  for (int k = 0; k < iters; ++k) {
    Vec x1 = p.G.prox(tau, x - tau * p.K.apply_adjoint(y));
    double w = 1 / std::sqrt(1 + 2 * gamma * tau);
    double s1 = sigma / w;
    y = p.Fstar.prox(s1, y + s1 * p.K.apply(x1 + w * (x1 - x)));
    x = std::move(x1);
    tau *= w;
    sigma = s1;
  }
  return {x, y};
}

// Refines a saddle point when the x-minimiser of the Lagrangian is explicit, by
// restarted FISTA on the dual (projection onto dom F*). lip bounds |K|^2 / gamma_G.
std::pair<Vec, Vec> dual_refine(const SaddleProblem &p, const std::function<Vec(const Vec &)> &x_of_y, double lip,
                                std::pair<Vec, Vec> start, double tol = 1e-11, int max_iters = 200000) {
  Vec y = start.second, z = y;
  double t = 1;
  auto residual = [&](const Vec &v) { return p.self_consistency(x_of_y(v), v); };
  double best = residual(y);
  Vec best_y = y;
  for (int k = 1; k <= max_iters && best > tol; ++k) {
    Vec yn = p.Fstar.prox(1.0, z + p.K.apply(x_of_y(z)) / lip);
    if ((z - yn).dot(yn - y) > 0) t = 1;
    const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
    z = yn + ((t - 1) / tn) * (yn - y);
    y = std::move(yn);
    t = tn;
    if (k % 50 == 0) {
      const double r = residual(y);
      if (r < best) best = r, best_y = y;
    }
  }
  if (best >= residual(start.second)) return start;
  return {x_of_y(best_y), best_y};
}

std::mutex cache_mutex;
std::map<std::string, std::pair<Vec, Vec>> saddle_cache;

std::pair<Vec, Vec> cached(const std::string &key, const std::function<std::pair<Vec, Vec>()> &make) {
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = saddle_cache.find(key);
    if (it != saddle_cache.end()) return it->second;
  }
  auto v = make();
  std::lock_guard<std::mutex> lock(cache_mutex);
  return saddle_cache.emplace(key, std::move(v)).first->second;
}

Vec square_image(int nx, int ny) {
  Vec f = Vec::Zero(Index(nx) * ny);
  for (int j = ny / 4; j < ny - ny / 4; ++j)
    for (int i = nx / 4; i < nx - nx / 4; ++i) f[i + Index(nx) * j] = 1;
  return f;
}

Problem make_quadratic(Params &P) {
  const int dim = P.get("dim", 4);
  const double gamma = P.get("gamma", 1.0);
  const double L = P.get("L", gamma);
  const std::string part = P.get<std::string>("part", "G");
  const double coupling = P.get("coupling", 0.0);
  const double lambda = P.get("lambda", 0.0);
  P.finish();
  if (dim < 1) throw std::invalid_argument("catalog quadratic: dim must be at least 1");
  if (gamma < 0 || L < gamma) throw std::invalid_argument("catalog quadratic: need 0 <= gamma <= L");
  if (coupling != 0 && part != "J") throw std::invalid_argument("catalog quadratic: coupling needs part = \"J\"");
  if (lambda < 0 || (lambda != 0 && part != "J"))
    throw std::invalid_argument("catalog quadratic: lambda must be nonnegative and needs part = \"J\"");
  if (dim > 1 && !(std::abs(coupling) * (dim - 1) < 1))
    throw std::invalid_argument("catalog quadratic: |coupling| must be below 1/(dim-1)");
  Vec d = dim == 1 ? Vec::Constant(1, gamma) : Vec(Vec::LinSpaced(dim, gamma, L));
  CompositeProblem p;
  p.name = "quadratic";
  if (part == "G") {
    p.G = diag_quadratic(d);
    p.J = zero_smooth(dim);
  } else if (part == "J") {
    p.G = lambda > 0 ? l1_norm(dim, lambda) : zero_prox(dim);
    // A_ij = coupling sqrt(d_i d_j) off the diagonal; gamma and L then come from the spectrum.
    Mat A = Mat(d.asDiagonal());
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (i != j) A(i, j) = coupling * std::sqrt(d[i] * d[j]);
    p.J = quadratic_smooth(A, Vec::Zero(dim));
  } else {
    throw std::invalid_argument("catalog quadratic: part must be \"G\" or \"J\"");
  }
  p.known_solution = Vec::Zero(dim);
  return p;
}

Problem make_lasso(Params &P, const std::string &name, Index m_def, Index n_def, std::uint64_t seed_def,
                   double lambda_def) {
  const int m = P.get("m", int(m_def));
  const int n = name == "stoch_lasso" ? P.get("blocks", int(n_def)) : P.get("n", int(n_def));
  const double lambda = P.get("lambda", lambda_def);
  const auto seed = P.get<std::uint64_t>("seed", seed_def);
  const std::string form = name == "lasso" ? P.get<std::string>("form", "composite") : "composite";
  P.finish();
  if (m < 1 || n < 1) throw std::invalid_argument("catalog " + name + ": dimensions must be positive");
  positive(lambda, "lambda");
  Mat A = gaussian(m, n, seed, 1, 1 / std::sqrt(double(m)));
  Vec f = gaussian(m, 1, seed, 2, 1.0).col(0);

  CompositeProblem c;
  c.name = name;
  c.G = l1_norm(n, lambda);
  c.J = least_squares(A, f);
  Vec xs = lasso_reference(c, A, f, lambda);
  c.known_solution = xs;
  c.reference_residual = c.fb_residual(xs, 1 / std::max(c.J.L, 1.0));
  if (form == "composite") return c;
  if (form != "saddle") throw std::invalid_argument("catalog lasso: form must be \"composite\" or \"saddle\"");
  SaddleProblem s = assemble_saddle(l1_norm(n, lambda), zero_smooth(n), quad_linear(m, 1.0, f), dense(A));
  s.name = "lasso";
  s.known_solution = std::make_pair(xs, Vec(A * xs - f));
  s.reference_residual = s.self_consistency(xs, A * xs - f);
  return s;
}

Problem make_rof(Params &P) {
  const int nx = P.get("nx", 16), ny = P.get("ny", 16);
  const double alpha = P.get("alpha", 0.25);
  const double noise = P.get("noise", 0.1);
  const auto seed = P.get<std::uint64_t>("seed", 1);
  const int iters = P.get("reference_iters", 100000);
  P.finish();
  positive(alpha, "alpha");
  const Index n = Index(nx) * ny;
  Vec f = square_image(nx, ny) + gaussian(n, 1, seed, 3, noise).col(0);
  SaddleProblem s = assemble_saddle(sq_distance(n, 1.0, f), zero_smooth(n), ball_indicator(n, 2, alpha), grad_op_2d(nx, ny));
  s.name = "rof";
  if (iters > 0) {
    nlohmann::json key = {{"p", "rof"}, {"nx", nx}, {"ny", ny}, {"alpha", alpha}, {"noise", noise}, {"seed", seed}, {"it", iters}};
    auto ref = cached(key.dump(), [&] {
      const double Kn = op_norm(s.K);
      return dual_refine(s, [&](const Vec &y) -> Vec { return f - s.K.apply_adjoint(y); }, Kn * Kn,
                         cp_reference(s, 1.0, iters));
    });
    s.known_solution = ref;
    s.reference_residual = s.self_consistency(ref.first, ref.second);
  }
  return s;
}

Problem make_gist(Params &P) {
  const int nx = P.get("nx", 8), ny = P.get("ny", 8);
  const double alpha = P.get("alpha", 0.05);
  const auto seed = P.get<std::uint64_t>("seed", 5);
  const int iters = P.get("reference_iters", 100000);
  P.finish();
  positive(alpha, "alpha");
  const Index n = Index(nx) * ny;
  CounterRng rng(seed, 4);
  Vec a(n);
  for (Index k = 0; k < n; ++k) a[k] = 0.5 + 0.5 * rng.uniform();
  Vec f = a.cwiseProduct(square_image(nx, ny)) + gaussian(n, 1, seed, 5, 0.05).col(0);
  LinearMap K = scale(1 / std::sqrt(8.0), grad_op_2d(nx, ny));
  SaddleProblem s = assemble_saddle(zero_prox(n), least_squares(Mat(a.asDiagonal()), f), ball_indicator(n, 2, alpha), K);
  s.name = "gist";
  if (iters > 0) {
    nlohmann::json key = {{"p", "gist"}, {"nx", nx}, {"ny", ny}, {"alpha", alpha}, {"seed", seed}, {"it", iters}};
    auto ref = cached(key.dump(), [&] {
      // Same saddle point with the smooth data term moved into a strongly convex G.
      SaddleProblem g = assemble_saddle(diag_least_squares(a, f), zero_smooth(n), ball_indicator(n, 2, alpha), K);
      const double Kn = op_norm(K);
      return dual_refine(
          g, [&](const Vec &y) -> Vec { return (a.cwiseProduct(f) - K.apply_adjoint(y)).cwiseQuotient(a.cwiseAbs2()); },
          Kn * Kn / g.G.gamma, cp_reference(g, g.G.gamma, iters));
    });
    s.known_solution = ref;
    s.reference_residual = s.self_consistency(ref.first, ref.second);
  }
  return s;
}

Problem make_cosh(Params &P) {
  const int dim = P.get("dim", 1);
  const double c = P.get("shift", 0.0);
  const double lambda = P.get("lambda", 0.0);
  P.finish();
  if (dim < 1) throw std::invalid_argument("catalog cosh_newton: dim must be at least 1");
  if (lambda < 0) throw std::invalid_argument("catalog cosh_newton: lambda must be nonnegative");
  CompositeProblem p;
  p.name = "cosh_newton";
  p.G = lambda > 0 ? l1_norm(dim, lambda) : zero_prox(dim);
  p.J = cosh_sum(dim, c);
  const double xs = (c > 0 ? 1 : (c < 0 ? -1 : 0)) * std::max(std::abs(c) - std::asinh(lambda), 0.0);
  p.known_solution = Vec::Constant(dim, xs);
  return p;
}

Problem make_dr(Params &P) {
  const double a = P.get("a", 0.0), b = P.get("b", 2.0), c = P.get("c", 1.0);
  const int dim = P.get("dim", 1);
  P.finish();
  if (a < 0 || b < 0 || !(a + b > 0)) throw std::invalid_argument("catalog dr_linear: need a, b >= 0 and a + b > 0");
  SplitProblem s;
  s.name = "dr_linear";
  s.dim = dim;
  s.A.name = "a*u";
  s.A.apply = [a](const Vec &u) -> Vec { return a * u; };
  s.A.resolvent = [a](double l, const Vec &v) -> Vec { return v / (1 + l * a); };
  s.B.name = "b*(u-c)";
  s.B.apply = [b, c](const Vec &u) -> Vec { return b * (u.array() - c).matrix(); };
  s.B.resolvent = [b, c](double l, const Vec &v) -> Vec { return (v.array() + l * b * c).matrix() / (1 + l * b); };
  s.u_star = Vec::Constant(dim, b * c / (a + b));
  return s;
}

Problem make_km(Params &P) {
  const double alpha = P.get("alpha", 0.5);
  const std::string map = P.get<std::string>("map", "rotation");
  const double angle = P.get("angle", 0.5);
  const int dim = P.get("dim", 2);
  P.finish();
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("catalog km_linear: alpha must lie in (0, 1)");
  Mat N;
  if (map == "negation") {
    N = -Mat::Identity(dim, dim);
  } else if (map == "rotation" || map == "reflection") {
    if (dim != 2) throw std::invalid_argument("catalog km_linear: rotation and reflection need dim = 2");
    const double co = std::cos(angle), si = std::sin(angle);
    N.resize(2, 2);
    if (map == "rotation")
      N << co, -si, si, co;
    else
      N << std::cos(2 * angle), std::sin(2 * angle), std::sin(2 * angle), -std::cos(2 * angle);
  } else {
    throw std::invalid_argument("catalog km_linear: map must be negation, rotation or reflection");
  }
  Mat T = (1 - alpha) * Mat::Identity(dim, dim) + alpha * N;
  FixedPointProblem f;
  f.name = "km_linear";
  f.dim = dim;
  f.alpha = alpha;
  f.T = [T](const Vec &u) -> Vec { return T * u; };
  f.u_star = Vec::Zero(dim);
  return f;
}

Problem make_saddle_toy(Params &P) {
  const double k = P.get("k", 1.0);
  P.finish();
  SaddleProblem s = assemble_saddle(sq_distance(1, 1.0, Vec::Zero(1)), zero_smooth(1), quad_linear(1, 1.0, Vec::Zero(1)),
                                    dense(Mat::Constant(1, 1, k)));
  s.name = "saddle_toy";
  s.known_solution = std::make_pair(Vec(Vec::Zero(1)), Vec(Vec::Zero(1)));
  return s;
}

} // namespace

std::vector<std::string> catalog_names() {
  return {"quadratic", "lasso", "rof", "cosh_newton", "dr_linear", "km_linear", "stoch_lasso", "saddle_toy", "gist"};
}

Problem catalog(const std::string &name, const nlohmann::json &params) {
  Params P(name, params);
  if (name == "quadratic") return make_quadratic(P);
  if (name == "lasso") return make_lasso(P, name, 5, 5, 1, 0.1);
  if (name == "stoch_lasso") return make_lasso(P, name, 24, 8, 3, 0.5);
  if (name == "rof") return make_rof(P);
  if (name == "gist") return make_gist(P);
  if (name == "cosh_newton") return make_cosh(P);
  if (name == "dr_linear") return make_dr(P);
  if (name == "km_linear") return make_km(P);
  if (name == "saddle_toy") return make_saddle_toy(P);
  throw UnknownProblem("unknown problem '" + name + "'");
}

} // namespace ppm
