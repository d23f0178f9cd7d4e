#include "ppm/engine.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace ppm {

LinearMap TrajectoryLog::metric(int i) const {
  if (i < 0 || i > n_steps()) throw std::out_of_range("TrajectoryLog::metric: index out of range");
  if (i < n_steps()) return plans[i].ZM();
  if (final_metric.dim_in() == 0) throw std::logic_error("TrajectoryLog: missing next-plan metric");
  return final_metric;
}

void TrajectoryLog::fill_errors(const Vec &u_star) {
  for (std::size_t k = 0; k < iterates.size(); ++k) {
    Vec d = iterates[k] - u_star;
    records[k].err_sq = d.squaredNorm();
    records[k].metric_err_sq = seminorm_sq(metric(static_cast<int>(k)), d);
  }
}

double inclusion_residual(const StepPlan &plan, const Vec &next, const Vec &prev) {
  Vec r;
  if (plan.selection) {
    r = plan.W.apply(*plan.selection);
    if (plan.vprime) r += plan.vprime(next);
  } else {
    r = plan.htilde;
  }
  r += plan.M.apply(next - prev);
  return r.norm();
}

StepOutcome step(Solver &solver, const BlockVec &u_prev, int i) {
  if (!(u_prev.layout == solver.layout())) throw DimensionError("step: iterate layout does not match solver");
  auto [next, plan] = solver.step(u_prev.data, i);
  StepOutcome out{BlockVec(std::move(next), u_prev.layout), std::move(plan)};
  out.inclusion = inclusion_residual(out.plan, out.next.data, u_prev.data);
  return out;
}

TrajectoryLog run(Solver &solver, const BlockVec &u0, int N, const std::vector<Observer> &observers,
                  std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("run: N must be at least 1");
  solver.reset();
  TrajectoryLog log;
  log.solver = solver.name();
  log.layout = solver.layout();
  log.seed = seed;
  log.iterates.reserve(N + 1);
  log.plans.reserve(N);
  log.iterates.push_back(u0.data);
  log.records.emplace_back();
  BlockVec u = u0;
  for (int i = 0; i < N; ++i) {
    StepOutcome o;
    try {
      o = step(solver, u, i);
    } catch (const std::exception &e) {
      std::ostringstream s;
      s << "iteration " << i << ": " << e.what();
      throw StepError(s.str(), i);
    }
    IterRecord rec;
    rec.step_sq = (o.next.data - u.data).squaredNorm();
    rec.inclusion = o.inclusion;
    log.records.back().scalars = o.plan.scalars;
    log.records.push_back(rec);
    log.plans.push_back(std::move(o.plan));
    log.iterates.push_back(o.next.data);
    u = std::move(o.next);
    for (const auto &obs : observers) obs(log, i);
  }
  log.final_metric = solver.metric(u.data);
  log.final_scalars = solver.next_scalars();
  log.records.back().scalars = log.final_scalars;
  log.resampled = solver.resampled();
  return log;
}

namespace {

std::string fmt17(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

nlohmann::json jnum(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

} // namespace

// Row k describes iterate k; step-indexed quantities (step_sq, residuals) refer
// to the step that produced it, scalars to the step taken from it.
void write_csv(const TrajectoryLog &log, std::ostream &os) {
  os << "iter,err_sq,metric_err_sq,step_sq,gap,value_gap,ci_residual,qf_residual,tau,sigma,phi,psi,omega\n";
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto &r = log.records[k];
    os << k << ',' << fmt17(r.err_sq) << ',' << fmt17(r.metric_err_sq) << ',' << fmt17(r.step_sq) << ','
       << fmt17(r.gap) << ',' << fmt17(r.value_gap) << ',' << fmt17(r.ci_residual) << ',' << fmt17(r.qf_residual)
       << ',' << fmt17(r.scalars.tau) << ',' << fmt17(r.scalars.sigma) << ',' << fmt17(r.scalars.phi) << ','
       << fmt17(r.scalars.psi) << ',' << fmt17(r.scalars.omega) << '\n';
  }
}

void write_json(const TrajectoryLog &log, std::ostream &os, bool with_iterates) {
  nlohmann::json j;
  j["solver"] = log.solver;
  j["seed"] = log.seed;
  j["n_steps"] = log.n_steps();
  j["resampled"] = log.resampled;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto &r = log.records[k];
    nlohmann::json row;
    row["iter"] = k;
    row["err_sq"] = jnum(r.err_sq);
    row["metric_err_sq"] = jnum(r.metric_err_sq);
    row["step_sq"] = jnum(r.step_sq);
    row["gap"] = jnum(r.gap);
    row["value_gap"] = jnum(r.value_gap);
    row["ci_residual"] = jnum(r.ci_residual);
    row["qf_residual"] = jnum(r.qf_residual);
    row["inclusion"] = jnum(r.inclusion);
    row["tau"] = jnum(r.scalars.tau);
    row["sigma"] = jnum(r.scalars.sigma);
    row["phi"] = jnum(r.scalars.phi);
    row["psi"] = jnum(r.scalars.psi);
    row["omega"] = jnum(r.scalars.omega);
    if (with_iterates) row["u"] = std::vector<double>(log.iterates[k].data(), log.iterates[k].data() + log.iterates[k].size());
    rows.push_back(std::move(row));
  }
  j["records"] = std::move(rows);
  // nlohmann prints doubles with 17 significant digits (round-trip exact).
  os << j.dump(1) << '\n';
}

} // namespace ppm
