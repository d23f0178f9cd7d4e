#pragma once

#include "ppm/linops.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ppm {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Solver-declared precondition failure (step bounds, singular Hessian, ...).
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ScalarParams {
  double tau = kNaN;   // tau_i
  double sigma = kNaN; // sigma_{i+1}
  double phi = kNaN;   // phi_i
  double psi = kNaN;   // psi_{i+1}
  double omega = kNaN; // omega_i
};

// Extra data exposed by primal-dual solvers, u = (x, y).
struct SaddleParts {
  LinearMap K;
  Index nx = 0, ny = 0;
  double tau = 1, sigma = 1, phi = 1, psi = 1; // T_i, Sigma_{i+1}, Phi_i, Psi_{i+1} as scalars
  Vec gsel;                                   // element of d[G+J](x+)
  Vec fsel;                                   // element of dF*(y+)
  std::function<Vec(const Vec &)> vj;         // V^J_{i+1}
};

struct StepPlan {
  LinearMap M, W, Z;
  std::function<Vec(const Vec &)> vprime;
  std::function<double(const Vec &next, const Vec &prev, const Vec &star)> delta;
  ScalarParams scalars;
  std::optional<Vec> selection; // h in H(u+), when H has a pointwise selection
  Vec htilde;                   // element of W H(u+) + V'(u+) certified by the update
  std::optional<SaddleParts> saddle;
  bool claims_certificate = true;

  LinearMap ZM() const { return compose(Z, M); }
};

class Solver {
public:
  virtual ~Solver() = default;
  virtual std::string name() const = 0;
  virtual BlockLayout layout() const = 0;
  // Step i from u; advances the parameter schedule.
  virtual std::pair<Vec, StepPlan> step(const Vec &u, int i) = 0;
  // Z_{i+1} M_{i+1} of the step about to be taken from u.
  virtual LinearMap metric(const Vec &u) const = 0;
  // Scalars of the step about to be taken.
  virtual ScalarParams next_scalars() const { return {}; }
  // Restore the initial schedule.
  virtual void reset() = 0;
  virtual bool claims_certificate() const { return true; }
  // Empty random draws rejected and redrawn so far (stochastic solvers).
  virtual int resampled() const { return 0; }
};

struct IterRecord {
  double err_sq = kNaN;
  double metric_err_sq = kNaN;
  double step_sq = kNaN;
  double gap = kNaN;
  double value_gap = kNaN;
  double ci_residual = kNaN;
  double qf_residual = kNaN;
  double inclusion = kNaN;
  ScalarParams scalars;
};

struct TrajectoryLog {
  std::string solver;
  BlockLayout layout;
  std::vector<Vec> iterates;       // N+1 entries
  std::vector<StepPlan> plans;     // N entries
  std::vector<IterRecord> records; // N+1 entries, record k describes iterate k
  LinearMap final_metric;          // Z_{N+1} M_{N+1}
  ScalarParams final_scalars;
  std::uint64_t seed = 0;
  int resampled = 0;

  int n_steps() const { return static_cast<int>(plans.size()); }
  // Z_{i+1}M_{i+1} for i in [0, N]; i == N gives the declared next metric.
  LinearMap metric(int i) const;
  void fill_errors(const Vec &u_star);
};

using Observer = std::function<void(const TrajectoryLog &, int step)>;

struct StepError : std::runtime_error {
  int iteration;
  StepError(const std::string &msg, int it) : std::runtime_error(msg), iteration(it) {}
};

// One step with the inclusion residual |W h + V'(u+) + M(u+ - u)| evaluated.
struct StepOutcome {
  BlockVec next;
  StepPlan plan;
  double inclusion = kNaN;
};
StepOutcome step(Solver &solver, const BlockVec &u_prev, int i);
double inclusion_residual(const StepPlan &plan, const Vec &next, const Vec &prev);

TrajectoryLog run(Solver &solver, const BlockVec &u0, int N, const std::vector<Observer> &observers = {},
                  std::uint64_t seed = 0);

void write_csv(const TrajectoryLog &log, std::ostream &os);
void write_json(const TrajectoryLog &log, std::ostream &os, bool with_iterates = false);

} // namespace ppm
