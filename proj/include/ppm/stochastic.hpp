#pragma once

#include "ppm/engine.hpp"
#include "ppm/problems.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ppm {

enum class SamplingScheme { independent, uniform_single, full };
SamplingScheme parse_scheme(const std::string &s);
std::string to_string(SamplingScheme s);

struct BlockSampler {
  BlockLayout layout;
  SamplingScheme scheme = SamplingScheme::full;
  Vec pi;                       // per-block inclusion probabilities (independent scheme)
  std::function<Vec(int)> pi_at; // optional iteration-dependent override of pi
  std::uint64_t rng_seed = 0;

  std::size_t m() const { return layout.size(); }
  // pi_{j,i} for every block j.
  Vec probabilities(int i) const;
  // Sampler for replicate r: stream (seed, r).
  BlockSampler for_replicate(std::uint64_t r) const;
};

// Validates pi in (0, 1]; pi is ignored for the uniform and full schemes.
BlockSampler make_sampler(BlockLayout layout, SamplingScheme scheme, Vec pi = {}, std::uint64_t seed = 0);
BlockSampler make_sampler(BlockLayout layout, SamplingScheme scheme, double pi, std::uint64_t seed = 0);

struct SampledStep {
  std::vector<std::size_t> S; // sorted block indices
  Vec pi;                     // pi_{j,i} for all blocks
  Vec mask;                   // per coordinate: 1 on sampled blocks
  Vec weights;                // per coordinate: 1/pi_j on sampled blocks, 0 elsewhere
  LinearMap P_S, Pi_S;
  int resamples = 0;          // empty draws rejected before this one
};

// Deterministic in (sampler.rng_seed, i).
SampledStep sample(const BlockSampler &sampler, int i);

// Pi_S-relative smoothness factor. Quadratic J: largest eigenvalue of
// Pi^{1/2} A_SS Pi^{1/2}. Otherwise from declared per-block constants L_j as
// |S| max_{j in S} L_j / pi_j.
double blockwise_L(const SmoothFn &J, const BlockLayout &layout, const std::vector<std::size_t> &S, const Vec &pi);

// A_S^+ with A_S A_S^+ = A_S^+ A_S = P_S and A_S^+ = P_S A_S^+ P_S.
Mat sampled_pinv(const Mat &A, const BlockLayout &layout, const std::vector<std::size_t> &S);
double pinv_identity_residual(const Mat &A, const Mat &Aplus, const Mat &P);
Mat projection_matrix(const BlockLayout &layout, const std::vector<std::size_t> &S);

// E[(I-P_S) H (I-P_S)] under the sampler at iteration i.
Mat expected_complement(const Mat &H, const BlockSampler &sampler, int i = 0);
// 1 - lambda_max(H^{-1/2} E[(I-P_S) H (I-P_S)] H^{-1/2}).
double pbar(const Mat &H, const BlockSampler &sampler, int i = 0);
// Global Hessian variation: 0 for quadratic J, empty otherwise.
std::optional<double> delta_J(const SmoothFn &J);
double snewton_kappa(double pbar, double delta);
double snewton_delta_bound(double pbar);

// Largest tau accepted by make_sgd for this sampler (same candidate sets as its check).
double sgd_max_step(const SmoothFn &J, const BlockSampler &sampler);

std::unique_ptr<Solver> make_sgd(const CompositeProblem &p, BlockSampler sampler, double tau, bool force = false);
std::unique_ptr<Solver> make_snewton(const CompositeProblem &p, BlockSampler sampler, bool proximal);

using RunFactory = std::function<TrajectoryLog(std::uint64_t replicate)>;
using Statistic = std::function<double(const TrajectoryLog &, int k)>;

// err_sq, metric_err_sq, step_sq, gap, value_gap, ci_residual, qf_residual, inclusion.
Statistic named_statistic(const std::string &name);

struct McResult {
  std::vector<double> mean;
  std::vector<double> std_error;
  int replicates = 0;
  std::vector<TrajectoryLog> logs; // kept when requested, in replicate order
};

// Replicates run in parallel; the reduction sums in replicate order.
McResult mc_expectation(const RunFactory &factory, int replicates, const Statistic &stat, bool keep_logs = false);

} // namespace ppm
