#include "partrace/krylov.hpp"
#include "partrace/probes.hpp"
#include "partrace/ptrace.hpp"
#include "partrace/random.hpp"
#include "partrace/spinsys.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace partrace;

LinOp chain(int n) { return build_hamiltonian(with_field(chain_xx(n, 1.0, false), 0.3)); }

void BM_HamiltonianApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::Index b = state.range(1);
  const LinOp h = build_hamiltonian(with_field(long_range_xx(n, 2.0), 0.3));
  auto rng = make_stream(1, 0);
  const Eigen::MatrixXd x = gaussian_matrix(h.dim(), b, rng);
  Eigen::MatrixXd y(h.dim(), b);
  for (auto _ : state) {
    h.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_HamiltonianApply)->Args({10, 1})->Args({10, 4})->Args({14, 1})->Args({14, 4})
    ->Unit(benchmark::kMicrosecond);

void BM_BlockLanczosDepth(benchmark::State& state) {
  const LinOp h = chain(static_cast<int>(state.range(0)));
  const Eigen::Index depth = state.range(1);
  auto rng = make_stream(2, 0);
  const Eigen::MatrixXd z = gaussian_matrix(h.dim(), 4, rng);
  const Eigen::MatrixXd q(h.dim(), 0);
  for (auto _ : state) {
    BlockLanczos lanczos(h, z, q);
    lanczos.extend(depth);
    benchmark::DoNotOptimize(lanczos.tridiagonal().diag_blocks.back().data());
  }
}
BENCHMARK(BM_BlockLanczosDepth)->Args({12, 16})->Args({12, 32})->Args({14, 32})
    ->Unit(benchmark::kMillisecond);

void BM_LowestEigenpairs(benchmark::State& state) {
  const LinOp h = chain(static_cast<int>(state.range(0)));
  const Eigen::Index k = state.range(1);
  for (auto _ : state) {
    const DeflationBasis q = lowest_eigenpairs(h, k);
    benchmark::DoNotOptimize(q.lambda.data());
  }
}
BENCHMARK(BM_LowestEigenpairs)->Args({10, 8})->Args({12, 16})->Unit(benchmark::kMillisecond);

void BM_EstimateThermal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LinOp h = chain(n);
  const BipartiteSplit split(n, 2);
  const DeflationBasis q = lowest_eigenpairs(h, state.range(1));
  const double betas[] = {0.1, 1.0, 10.0, 100.0};
  ProbeConfig probes;
  probes.m = 5;
  for (auto _ : state) {
    const ThermalResult r = estimate_thermal(h, split, q, betas, probes);
    benchmark::DoNotOptimize(r.estimates.back().mean.mat.data());
  }
}
BENCHMARK(BM_EstimateThermal)->Args({10, 0})->Args({10, 8})->Args({12, 16})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
