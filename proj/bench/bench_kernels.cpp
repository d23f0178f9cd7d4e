// Serial reference against the OpenMP kernels.
#include "ppm/kernels.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace ppm;

namespace {

using GradFn = void (*)(int, int, const double *, double *);

void run_grad(benchmark::State &state, GradFn f, bool adjoint) {
  const int n = int(state.range(0));
  const std::size_t pixels = std::size_t(n) * n;
  std::vector<double> in(adjoint ? 2 * pixels : pixels), out(adjoint ? pixels : 2 * pixels);
  for (std::size_t k = 0; k < in.size(); ++k) in[k] = double(k % 17) / 17;
  for (auto _ : state) {
    f(n, n, in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(pixels));
  state.counters["threads"] = kernels::max_threads();
}

void BM_grad2d_serial(benchmark::State &s) { run_grad(s, kernels::grad2d_serial, false); }
void BM_grad2d_omp(benchmark::State &s) { run_grad(s, kernels::grad2d_omp, false); }
void BM_grad2d_adjoint_serial(benchmark::State &s) { run_grad(s, kernels::grad2d_adjoint_serial, true); }
void BM_grad2d_adjoint_omp(benchmark::State &s) { run_grad(s, kernels::grad2d_adjoint_omp, true); }

void run_matvec(benchmark::State &state, Vec (*f)(const Mat &, const Vec &)) {
  const Index n = Index(state.range(0));
  const Mat A = Mat::Random(n, n);
  const Vec x = Vec::Random(n);
  for (auto _ : state) {
    Vec y = f(A, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(n) * n);
  state.counters["threads"] = kernels::max_threads();
}

void BM_matvec_serial(benchmark::State &s) { run_matvec(s, kernels::matvec_serial); }
void BM_matvec_omp(benchmark::State &s) { run_matvec(s, kernels::matvec_omp); }
void BM_matvec_t_serial(benchmark::State &s) { run_matvec(s, kernels::matvec_t_serial); }
void BM_matvec_t_omp(benchmark::State &s) { run_matvec(s, kernels::matvec_t_omp); }

} // namespace

BENCHMARK(BM_grad2d_serial)->Arg(16)->Arg(256)->Arg(1024);
BENCHMARK(BM_grad2d_omp)->Arg(16)->Arg(256)->Arg(1024);
BENCHMARK(BM_grad2d_adjoint_serial)->Arg(16)->Arg(256)->Arg(1024);
BENCHMARK(BM_grad2d_adjoint_omp)->Arg(16)->Arg(256)->Arg(1024);
BENCHMARK(BM_matvec_serial)->Arg(64)->Arg(512)->Arg(2048);
BENCHMARK(BM_matvec_omp)->Arg(64)->Arg(512)->Arg(2048);
BENCHMARK(BM_matvec_t_serial)->Arg(64)->Arg(512)->Arg(2048);
BENCHMARK(BM_matvec_t_omp)->Arg(64)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
