#include "ppm/cli.hpp"

#include "ppm/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace ppm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Strict reader over one JSON object; finish() rejects keys nobody asked for.
class Reader {
public:
  Reader(std::string where, const json &j) : where_(std::move(where)), j_(j) {
    if (!j_.is_null() && !j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string &key) {
    used_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  template <class T> T get(const std::string &key, T def) {
    if (!has(key)) return def;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception &) {
      throw ConfigError(where_ + ": '" + key + "' has the wrong type");
    }
  }

  const json &raw(const std::string &key) {
    used_.insert(key);
    static const json null;
    return j_.is_object() && j_.contains(key) ? j_.at(key) : null;
  }

  void finish() const {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

private:
  std::string where_;
  const json &j_;
  std::set<std::string> used_;
};

const std::vector<std::string> kCertIds = {"CI~", "CI", "QF", "DI", "CI-Γ", "D𝓔", "DI-𝒢", "value-DI"};

const std::set<std::string> kStochastic = {"sgd", "snewton", "prox_snewton"};

std::string kind_of(const Problem &p) {
  switch (p.index()) {
  case 0:
    return "composite";
  case 1:
    return "saddle";
  case 2:
    return "split";
  default:
    return "fixed_point";
  }
}

template <class T> const T &need(const Problem &p, const std::string &solver) {
  if (const T *q = std::get_if<T>(&p)) return *q;
  throw ConfigError("solver '" + solver + "' does not apply to a " + kind_of(p) + " problem");
}

BlockVec start_point(const json &u0, const BlockLayout &layout, double def) {
  const Index n = layout.total();
  if (u0.is_null()) return BlockVec(Vec::Constant(n, def), layout);
  if (u0.is_number()) return BlockVec(Vec::Constant(n, u0.get<double>()), layout);
  if (!u0.is_array()) throw ConfigError("u0: expected a number or an array");
  if (Index(u0.size()) != n)
    throw ConfigError("u0: expected " + std::to_string(n) + " entries, got " + std::to_string(u0.size()));
  Vec v(n);
  for (Index k = 0; k < n; ++k) {
    if (!u0[std::size_t(k)].is_number()) throw ConfigError("u0: entries must be numbers");
    v[k] = u0[std::size_t(k)].get<double>();
  }
  return BlockVec(v, layout);
}

BlockSampler sampler_from(Reader &r, Index dim, std::uint64_t seed) {
  const std::string scheme = r.get<std::string>("scheme", "uniform");
  const int blocks = r.get("blocks", int(dim));
  const double pi = r.get("pi", 0.5);
  if (blocks < 1 || dim % blocks != 0)
    throw ConfigError("solver params: blocks must divide the dimension " + std::to_string(dim));
  SamplingScheme sc;
  try {
    sc = parse_scheme(scheme);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  if (sc == SamplingScheme::independent && !(pi > 0 && pi <= 1)) throw ConfigError("solver params: pi must lie in (0, 1]");
  return make_sampler(BlockLayout::uniform(std::size_t(blocks), dim / blocks), sc, pi, seed);
}

double finite_or(double v, double def) { return std::isfinite(v) ? v : def; }

json fit_json(const std::function<RateFit()> &f) {
  try {
    return f().to_json();
  } catch (const std::exception &e) {
    return json{{"error", e.what()}};
  }
}

// Entry N = value after N steps; entry 0 holds the first finite value so the
// precision floor has a reference level.
std::vector<double> indexed_by_steps(const std::vector<double> &per_step) {
  std::vector<double> g(per_step.size() + 1, kNaN);
  for (std::size_t k = 0; k < per_step.size(); ++k) g[k + 1] = per_step[k];
  for (double v : per_step)
    if (std::isfinite(v)) {
      g[0] = v;
      break;
    }
  return g;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void print_reports(const std::vector<CertificateReport> &reports) {
  for (const auto &r : reports)
    std::cout << std::left << std::setw(9) << r.name << " " << r.verdict() << "  min_residual=" << std::setprecision(6)
              << r.min_residual << "  scale=" << r.scale << "  worst_index=" << r.worst_index << "\n";
}

} // namespace

std::string canonical_certificate(const std::string &id) {
  for (const auto &c : kCertIds)
    if (id == c) return c;
  if (id == "CI-tilde" || id == "CItilde") return "CI~";
  if (id == "CI-Gamma" || id == "CI-G") return "CI-Γ";
  if (id == "DE" || id == "D-E" || id == "expected-DI") return "D𝓔";
  if (id == "DI-G" || id == "DI-gap") return "DI-𝒢";
  if (id == "valueDI") return "value-DI";
  throw ConfigError("unknown certificate id '" + id + "'");
}

RunConfig parse_config(const json &j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  Reader r("config", j);
  RunConfig c;

  const json &pj = r.raw("problem");
  if (pj.is_string()) {
    c.problem = pj.get<std::string>();
  } else if (pj.is_object()) {
    Reader pr("problem", pj);
    c.problem = pr.get<std::string>("name", "");
    c.problem_params = pr.get<json>("params", json::object());
    pr.finish();
  } else {
    throw ConfigError("config: 'problem' is required (name or {name, params})");
  }
  if (c.problem.empty()) throw ConfigError("problem: 'name' is required");

  const json &sj = r.raw("solver");
  if (sj.is_string()) {
    c.solver = sj.get<std::string>();
  } else if (sj.is_object()) {
    Reader sr("solver", sj);
    c.solver = sr.get<std::string>("name", "");
    c.solver_params = sr.get<json>("params", json::object());
    sr.finish();
  } else {
    throw ConfigError("config: 'solver' is required (name or {name, params})");
  }
  if (c.solver.empty()) throw ConfigError("solver: 'name' is required");
  if (!c.problem_params.is_object()) throw ConfigError("problem: 'params' must be an object");
  if (!c.solver_params.is_object()) throw ConfigError("solver: 'params' must be an object");

  c.N = r.get("N", c.N);
  if (c.N < 1) throw ConfigError("config: N must be at least 1");
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.certificates = r.get<std::vector<std::string>>("certificates", {});
  for (auto &id : c.certificates) id = canonical_certificate(id);
  c.output = r.get<std::string>("output", c.output);
  c.format = r.get<std::string>("format", c.format);
  if (c.format != "csv" && c.format != "json") throw ConfigError("config: format must be \"csv\" or \"json\"");
  c.u0 = r.raw("u0");
  c.replicates = r.get("replicates", c.replicates);
  if (c.replicates < 1) throw ConfigError("config: replicates must be at least 1");
  r.finish();
  return c;
}

RunConfig parse_config_text(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig load_config(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

Experiment build(const RunConfig &cfg, bool force) {
  Experiment ex;
  ex.cfg = cfg;
  try {
    ex.problem = catalog(cfg.problem, cfg.problem_params);
  } catch (const PreconditionError &) {
    throw;
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  const Problem &P = ex.problem;
  const std::string &name = cfg.solver;
  Reader r("solver params", cfg.solver_params);
  ex.stochastic = kStochastic.count(name) > 0;
  ex.saddle = std::holds_alternative<SaddleProblem>(P);
  if (ex.stochastic && cfg.replicates < 1) throw ConfigError("replicates must be positive");
  if (!ex.stochastic && cfg.replicates != 1) throw ConfigError("replicates only applies to stochastic solvers");

  BlockLayout layout;
  double u0_default = 1;

  if (name == "prox") {
    const auto &p = need<CompositeProblem>(P, name);
    const double tau0 = r.get("tau0", 1.0);
    const bool accel = r.get("accel", false);
    const double gamma = r.get("gamma", p.G.gamma);
    const std::string sched = r.get<std::string>("schedule", accel ? "accel" : "constant");
    ex.value_mode = r.get("value_mode", false);
    ScalarSchedule s;
    if (sched == "constant" || sched == "accel") {
      s = prox_schedule(tau0, gamma, sched == "accel");
    } else if (sched == "geometric") {
      s = prox_schedule(tau0, gamma, false);
      s.rule = ScheduleRule::geometric_tau;
    } else {
      throw ConfigError("solver params: schedule must be constant, accel or geometric");
    }
    ex.make_solver = [p, s, vm = ex.value_mode](std::uint64_t) { return make_prox_schedule(p, s, vm); };
    layout = BlockLayout::single(p.dim());
    ex.u_star = p.known_solution;
  } else if (name == "graddesc" || name == "fb") {
    const auto &p = need<CompositeProblem>(P, name);
    GradDescOptions o;
    const double tau0 = r.get("tau0", p.J.L > 0 ? 0.9 / p.J.L : 1.0);
    o.accel = r.get("accel", false);
    o.value_mode = r.get("value_mode", false);
    o.proof_variant = r.get("proof_variant", false);
    o.tau_from_phi = r.get("tau_from_phi", true);
    o.gamma = r.get("gamma", -1.0);
    o.force = force;
    ex.value_mode = o.value_mode;
    const bool fb = name == "fb";
    ex.make_solver = [p, tau0, o, fb](std::uint64_t) { return fb ? make_fb(p, tau0, o) : make_graddesc(p, tau0, o); };
    layout = BlockLayout::single(p.dim());
    ex.u_star = p.known_solution;
  } else if (name == "newton" || name == "prox_newton") {
    const auto &p = need<CompositeProblem>(P, name);
    const bool prox = name == "prox_newton";
    ex.make_solver = [p, prox](std::uint64_t) { return make_newton(p, prox); };
    layout = BlockLayout::single(p.dim());
    u0_default = 0.5;
    ex.u_star = p.known_solution;
  } else if (name == "km") {
    const auto &p = need<FixedPointProblem>(P, name);
    const double alpha = r.get("alpha", p.alpha);
    ex.make_solver = [p, alpha](std::uint64_t) { return make_km(p.T, alpha, p.dim); };
    layout = BlockLayout::single(p.dim);
    ex.u_star = p.u_star;
  } else if (name == "dr") {
    const auto &p = need<SplitProblem>(P, name);
    const double lambda = r.get("lambda", 1.0);
    ex.make_solver = [p, lambda](std::uint64_t) { return make_dr(p, lambda); };
    layout = BlockLayout::from_lengths({p.dim, p.dim});
    if (p.u_star && lambda > 0) {
      Vec us(2 * p.dim);
      us << *p.u_star, p.v_star(lambda);
      ex.u_star = us;
    }
  } else if (name == "cp" || name == "gist") {
    const auto &p = need<SaddleProblem>(P, name);
    ex.gap_mode = r.get("gap_mode", false);
    if (name == "cp") {
      const double Kn = op_norm(p.K);
      CpOptions o;
      const double tau0 = r.get("tau0", 0.9 / Kn);
      const double sigma0 = r.get("sigma0", 0.9 / Kn);
      const double gamma = r.get("gamma", 0.0);
      o.forward_step = r.get("forward_step", false);
      o.gap_mode = ex.gap_mode;
      ex.make_solver = [p, tau0, sigma0, gamma, o](std::uint64_t) { return make_cp(p, tau0, sigma0, gamma, o); };
      ex.gamma_tilde = (p.G.gamma + p.J.gamma) * (ex.gap_mode ? 0.5 : 1.0);
    } else {
      GistOptions o;
      o.gap_mode = ex.gap_mode;
      ex.make_solver = [p, o](std::uint64_t) { return make_gist(p, o); };
      ex.gamma_tilde = 0;
    }
    ex.L_i = ex.gap_mode ? p.J.L : p.J.L / 2;
    layout = p.layout();
    if (p.known_solution) ex.u_star = p.join(p.known_solution->first, p.known_solution->second);
  } else if (ex.stochastic) {
    const auto &p = need<CompositeProblem>(P, name);
    BlockSampler s = sampler_from(r, p.dim(), cfg.seed);
    layout = s.layout;
    if (name == "sgd") {
      const json &t = r.raw("tau");
      double tau;
      if (t.is_null() || (t.is_string() && t.get<std::string>() == "auto"))
        tau = 0.99 * finite_or(sgd_max_step(p.J, s), 1.0);
      else if (t.is_number())
        tau = t.get<double>();
      else
        throw ConfigError("solver params: tau must be a number or \"auto\"");
      ex.make_solver = [p, s, tau, force](std::uint64_t rep) { return make_sgd(p, s.for_replicate(rep), tau, force); };
    } else {
      const bool prox = name == "prox_snewton";
      ex.make_solver = [p, s, prox](std::uint64_t rep) { return make_snewton(p, s.for_replicate(rep), prox); };
    }
    ex.u_star = p.known_solution;
  } else {
    throw ConfigError("unknown solver '" + name +
                      "' (prox, graddesc, fb, newton, prox_newton, km, dr, cp, gist, sgd, snewton, prox_snewton)");
  }
  r.finish();

  // Surfaces preconditions before any iteration.
  auto probe = ex.make_solver(0);
  ex.u0 = start_point(cfg.u0, probe->layout(), u0_default);

  if (ex.stochastic) {
    // Stochastic Newton claims nothing unless delta_J < bound(pbar); sgd's step bound is checked at construction.
    if (name == "sgd" || probe->claims_certificate()) ex.applicable = {"D𝓔"};
    // Per-realisation certificates only when the sampled step is the deterministic one.
    const bool full = ex.cfg.solver_params.value("scheme", std::string()) == "full";
    if (full && probe->claims_certificate()) ex.applicable.insert(ex.applicable.end(), {"CI~", "CI", "QF", "DI"});
  } else {
    ex.applicable = {"CI~", "CI", "QF", "DI"};
    if (ex.saddle) {
      ex.applicable.push_back("CI-Γ");
      if (ex.gap_mode) ex.applicable.push_back("DI-𝒢");
    }
    if (ex.value_mode) ex.applicable.push_back("value-DI");
  }
  for (const auto &id : cfg.certificates) {
    if (std::find(ex.applicable.begin(), ex.applicable.end(), id) == ex.applicable.end())
      throw ConfigError("certificate " + id + " is not claimed by solver '" + name + "' in this configuration");
    if (id == "D𝓔" && cfg.replicates < 2) throw ConfigError("certificate D𝓔 needs replicates >= 2");
  }
  return ex;
}

Outcome execute(const Experiment &ex) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  const int N = ex.cfg.N;
  auto one = [&](std::uint64_t rep) {
    auto solver = ex.make_solver(rep);
    TrajectoryLog log = run(*solver, ex.u0, N, {}, ex.cfg.seed + rep);
    if (ex.u_star) log.fill_errors(*ex.u_star);
    return log;
  };
  const std::string stat = ex.u_star ? "err_sq" : "step_sq";
  if (ex.stochastic && ex.cfg.replicates >= 2) {
    McResult mc = mc_expectation(one, ex.cfg.replicates, named_statistic(stat), true);
    out.logs = std::move(mc.logs);
    out.err_mean = std::move(mc.mean);
    out.err_stderr = std::move(mc.std_error);
  } else {
    out.logs.push_back(one(0));
    const auto s = named_statistic(stat);
    for (int k = 0; k <= N; ++k) out.err_mean.push_back(s(out.logs[0], k));
    out.err_stderr.assign(out.err_mean.size(), 0.0);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<CertificateReport> certify(const Experiment &ex, const Outcome &out, std::vector<std::string> ids) {
  if (!ex.u_star) throw PreconditionError("certify: problem '" + ex.cfg.problem + "' has no known or reference solution");
  if (ids.empty()) {
    ids = ex.applicable;
    if (ex.stochastic && ex.cfg.replicates < 2)
      ids.erase(std::remove(ids.begin(), ids.end(), "D𝓔"), ids.end());
  }
  const Vec &us = *ex.u_star;
  std::vector<CertificateReport> reports;
  for (const auto &raw : ids) {
    const std::string id = canonical_certificate(raw);
    if (std::find(ex.applicable.begin(), ex.applicable.end(), id) == ex.applicable.end())
      throw ConfigError("certificate " + id + " is not claimed in this configuration");
    if (id == "D𝓔") {
      reports.push_back(check_expected_di(out.logs, us));
      continue;
    }
    // Deterministic certificates: worst replicate (relative to its scale).
    std::optional<CertificateReport> worst;
    for (const auto &log : out.logs) {
      CertificateReport rep;
      if (id == "CI~") rep = check_ci(log, us, CiVariant::tilde);
      else if (id == "CI") rep = check_ci(log, us, CiVariant::plain);
      else if (id == "QF") rep = check_qf(log, us);
      else if (id == "DI") rep = check_di(log, us);
      else if (id == "CI-Γ") rep = check_ci_gamma(log, us, ex.gamma_tilde, ex.L_i);
      else if (id == "DI-𝒢") rep = check_di_gap(log, std::get<SaddleProblem>(ex.problem), us, ErgodicMode::shifted);
      else if (id == "value-DI") rep = check_value_di(log, std::get<CompositeProblem>(ex.problem), us);
      if (!worst || rep.min_residual / rep.scale < worst->min_residual / worst->scale) worst = std::move(rep);
    }
    reports.push_back(std::move(*worst));
  }
  return reports;
}

json summarize(const Experiment &ex, const Outcome &out) {
  const TrajectoryLog &log = out.logs.front();
  const IterRecord &last = log.records.back();
  json s;
  s["problem"] = ex.cfg.problem;
  s["problem_params"] = ex.cfg.problem_params;
  s["solver"] = ex.cfg.solver;
  s["solver_params"] = ex.cfg.solver_params;
  s["N"] = ex.cfg.N;
  s["seed"] = ex.cfg.seed;
  s["replicates"] = int(out.logs.size());
  s["u_star_known"] = ex.u_star.has_value();
  s["elapsed_seconds"] = out.seconds;
  s["final"] = {{"err_sq", last.err_sq},
                {"metric_err_sq", last.metric_err_sq},
                {"step_sq", last.step_sq},
                {"inclusion", last.inclusion},
                {"mean_err_sq", out.err_mean.back()}};
  double max_incl = 0;
  for (const auto &rec : log.records)
    if (std::isfinite(rec.inclusion)) max_incl = std::max(max_incl, rec.inclusion);
  s["max_inclusion"] = max_incl;
  s["rates"] = {{"error", ex.u_star ? "err_sq" : "step_sq"},
                {"power", fit_json([&] { return fit_power(out.err_mean); })},
                {"linear", fit_json([&] { return fit_linear(out.err_mean); })},
                {"order", fit_json([&] {
                   std::vector<double> e(out.err_mean.size());
                   for (std::size_t k = 0; k < e.size(); ++k) e[k] = std::sqrt(out.err_mean[k]);
                   return fit_order(e);
                 })}};
  if (ex.u_star && ex.saddle) {
    try {
      const auto gaps = ergodic_gaps(log, std::get<SaddleProblem>(ex.problem), *ex.u_star, ErgodicMode::shifted);
      const auto g = indexed_by_steps(gaps);
      s["ergodic_gap"] = {{"mode", "CG*"}, {"final", g.back()}, {"power", fit_json([&] { return fit_power(g); })}};
    } catch (const std::domain_error &e) {
      s["ergodic_gap"] = {{"error", e.what()}};
    }
  }
  if (ex.u_star && ex.stochastic && ex.cfg.solver == "sgd") {
    const auto &p = std::get<CompositeProblem>(ex.problem);
    const auto gaps = expected_ergodic_value_gaps(out.logs, p, *ex.u_star);
    const auto g = indexed_by_steps(gaps);
    s["ergodic_value_gap"] = {{"final", g.back()}, {"power", fit_json([&] { return fit_power(g); })}};
  }
  return s;
}

namespace {

fs::path prepare_dir(RunConfig &cfg, const Flags &flags) {
  if (!flags.out.empty()) cfg.output = flags.out;
  if (flags.seed) cfg.seed = *flags.seed;
  fs::path dir(cfg.output);
  fs::create_directories(dir);
  return dir;
}

void write_outputs(const Experiment &ex, const Outcome &out, const fs::path &dir, json &summary) {
  {
    std::ofstream os(dir / (ex.cfg.format == "csv" ? "trajectory.csv" : "trajectory.json"));
    if (ex.cfg.format == "csv")
      write_csv(out.logs.front(), os);
    else
      write_json(out.logs.front(), os);
  }
  if (out.logs.size() > 1) {
    std::ofstream os(dir / "mean.csv");
    os << "k,mean,std_error\n" << std::setprecision(17);
    for (std::size_t k = 0; k < out.err_mean.size(); ++k)
      os << k << "," << out.err_mean[k] << "," << out.err_stderr[k] << "\n";
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

// Runs fn and maps exceptions to exit codes.
int guarded(const std::function<int()> &fn) {
  try {
    return fn();
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError &e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kPreconditionError;
  } catch (const StepError &e) {
    std::cerr << "step failed at iteration " << e.iteration << ": " << e.what() << "\n";
    return kPreconditionError;
  } catch (const std::invalid_argument &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}

} // namespace

int cmd_run(RunConfig cfg, const Flags &flags) {
  return guarded([&] {
    const fs::path dir = prepare_dir(cfg, flags);
    Experiment ex = build(cfg, flags.force);
    Outcome out = execute(ex);
    json summary = summarize(ex, out);
    int code = kOk;
    if (!cfg.certificates.empty()) {
      if (!ex.u_star) throw PreconditionError("certificates requested but the problem has no known solution");
      auto reports = certify(ex, out, cfg.certificates);
      summary["certificates"] = json::array();
      for (const auto &r : reports) {
        summary["certificates"].push_back(r.to_json());
        if (!r.pass() && flags.strict) code = kCertificateFailure;
      }
      print_reports(reports);
    }
    write_outputs(ex, out, dir, summary);
    std::cout << cfg.solver << " on " << cfg.problem << ": N=" << cfg.N << " final err_sq=" << std::setprecision(6)
              << summary["final"]["mean_err_sq"].get<double>() << " (" << out.seconds << " s), wrote "
              << (dir / "summary.json").string() << "\n";
    return code;
  });
}

int cmd_certify(RunConfig cfg, const Flags &flags) {
  return guarded([&] {
    const fs::path dir = prepare_dir(cfg, flags);
    Experiment ex = build(cfg, flags.force);
    if (!ex.u_star) throw PreconditionError("problem '" + cfg.problem + "' has no known or reference solution");
    Outcome out = execute(ex);
    auto reports = certify(ex, out, cfg.certificates);
    json j = json::array();
    bool ok = true;
    for (const auto &r : reports) {
      j.push_back(r.to_json());
      ok = ok && r.pass();
    }
    write_text(dir / "certificates.json", j.dump(2) + "\n");
    json summary = summarize(ex, out);
    summary["certificates"] = j;
    write_outputs(ex, out, dir, summary);
    print_reports(reports);
    return ok ? kOk : kCertificateFailure;
  });
}

int cmd_propcheck(const std::string &suite, int samples, std::uint64_t seed, const std::string &fixture,
                  const std::string &out_dir) {
  return guarded([&] {
    if (samples < 1) throw ConfigError("propcheck: samples must be positive");
    json j = json::array();
    bool ok = true;
    bool matched = false;
    auto emit = [&](const PropertyReport &r) {
      j.push_back(r.to_json());
      ok = ok && r.pass();
      std::cout << std::left << std::setw(12) << r.suite << " " << std::setw(16) << r.fixture << " " << std::setw(26)
                << r.inequality << " " << (r.pass() ? "pass" : "FAIL") << "  violations=" << r.violations << "/"
                << r.samples << "\n";
    };
    if (suite == "three-point") {
      for (const auto &f : three_point_fixtures()) {
        if (!fixture.empty() && f.name != fixture) continue;
        matched = true;
        for (const auto &id : three_point_ids())
          if (three_point_applicable(f, id)) emit(three_point_suite(f, id, samples, seed));
      }
    } else if (suite == "subspace") {
      for (const auto &f : subspace_fixtures()) {
        if (fixture.empty() ? f.expect_violation : f.name != fixture) continue;
        matched = true;
        SubspaceReport rep = subspace_chain(f, samples, seed);
        for (const auto &item : rep.items) emit(item);
        if (rep.implication_broken) {
          ok = false;
          std::cout << "subspace     " << f.name << " implication structure broken\n";
        }
      }
    } else if (suite == "sampler") {
      struct Case {
        std::string name;
        BlockSampler s;
      };
      std::vector<Case> cases = {
          {"uniform-4", make_sampler(BlockLayout::uniform(4, 2), SamplingScheme::uniform_single, 0.0, seed)},
          {"independent-8", make_sampler(BlockLayout::uniform(8, 1), SamplingScheme::independent, 0.7, seed)},
          {"full-4", make_sampler(BlockLayout::uniform(4, 1), SamplingScheme::full, 0.0, seed)}};
      for (const auto &c : cases) {
        if (!fixture.empty() && c.name != fixture) continue;
        matched = true;
        PropertyReport r = sampler_unbiasedness(c.s, samples);
        r.fixture = c.name;
        emit(r);
      }
    } else {
      throw ConfigError("propcheck: suite must be three-point, subspace or sampler");
    }
    if (!matched) throw ConfigError("propcheck: no fixture named '" + fixture + "' in suite " + suite);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "propcheck.json", j.dump(2) + "\n");
    }
    return ok ? kOk : kCertificateFailure;
  });
}

int cmd_report(const std::vector<std::string> &paths, const std::string &out_dir) {
  return guarded([&] {
    std::vector<fs::path> files;
    for (const auto &p : paths) {
      fs::path path(p);
      if (fs::is_directory(path)) {
        for (const auto &e : fs::recursive_directory_iterator(path))
          if (e.is_regular_file() && e.path().filename() == "summary.json") files.push_back(e.path());
      } else if (fs::is_regular_file(path)) {
        files.push_back(path);
      } else {
        throw ConfigError("report: no such file or directory '" + p + "'");
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("report: no summary.json found");
    auto param = [](const json &fit) -> std::string {
      if (!fit.is_object() || !fit.contains("parameter")) return "-";
      std::ostringstream os;
      os << std::setprecision(4) << fit["parameter"].get<double>();
      return os.str();
    };
    std::ostringstream csv;
    csv << "summary,problem,solver,N,final_err_sq,power_slope,linear_ratio,order_q\n";
    std::cout << std::left << std::setw(14) << "problem" << std::setw(14) << "solver" << std::setw(8) << "N"
              << std::setw(14) << "final_err_sq" << std::setw(10) << "slope" << std::setw(10) << "rho" << "q\n";
    for (const auto &f : files) {
      std::ifstream is(f);
      json s;
      try {
        s = json::parse(is);
      } catch (const json::parse_error &e) {
        throw ConfigError("report: " + f.string() + ": " + e.what());
      }
      const json &rates = s.at("rates");
      const json &fin = s.at("final").at("mean_err_sq");
      std::ostringstream err;
      err << std::setprecision(4) << (fin.is_number() ? fin.get<double>() : kNaN);
      std::cout << std::setw(14) << s.at("problem").get<std::string>() << std::setw(14)
                << s.at("solver").get<std::string>() << std::setw(8) << s.at("N").get<int>() << std::setw(14)
                << err.str() << std::setw(10) << param(rates.at("power")) << std::setw(10)
                << param(rates.at("linear")) << param(rates.at("order")) << "\n";
      csv << f.string() << "," << s.at("problem").get<std::string>() << "," << s.at("solver").get<std::string>()
          << "," << s.at("N").get<int>() << "," << err.str() << "," << param(rates.at("power")) << ","
          << param(rates.at("linear")) << "," << param(rates.at("order")) << "\n";
    }
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "report.csv", csv.str());
    }
    return kOk;
  });
}

} // namespace ppm::cli
