#include <benchmark/benchmark.h>

#include "deva/factorize.hpp"
#include "deva/harness.hpp"
#include "deva/msign.hpp"
#include "deva/optimizers.hpp"
#include "deva/rng.hpp"

using namespace deva;

namespace {

DenseMatrix fixed_gaussian(int n, int m, uint64_t seed = 1) {
    Rng rng(seed);
    return rng_gaussian(rng, n, m);
}

void BM_svd(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const DenseMatrix a = fixed_gaussian(n, n);
    for (auto _ : state) benchmark::DoNotOptimize(svd(a));
}
BENCHMARK(BM_svd)->Arg(9)->Arg(16)->Arg(32);

void BM_sym_eig(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const DenseMatrix g = fixed_gaussian(n, n);
    const DenseMatrix a = matmul_nt(g, g);
    for (auto _ : state) benchmark::DoNotOptimize(sym_eig(a));
}
BENCHMARK(BM_sym_eig)->Arg(9)->Arg(32);

void BM_msign_newton_schulz(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const DenseMatrix g = fixed_gaussian(n, n / 2);
    for (auto _ : state) benchmark::DoNotOptimize(msign_newton_schulz(g));
}
BENCHMARK(BM_msign_newton_schulz)->Arg(16)->Arg(64);

void BM_deva_sinf_step(benchmark::State& state) {
    Rng rng(3);
    HyperParams hp;
    hp.lr = 1e-2;
    hp.beta1 = 0.0;
    hp.beta2 = 0.99;
    hp.beta3 = 0.99;
    MatrixOptState st = make_matrix_state(9, 9, hp.freq);
    DenseMatrix x = rng_gaussian(rng, 9, 9);
    const DenseMatrix g = rng_gaussian(rng, 9, 9);
    for (auto _ : state) {
        deva_sinf_step(st, x, g, hp);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_deva_sinf_step);

void BM_run_single_trace(benchmark::State& state) {
    const RunConfig cfg = parse_config(R"({
      "problem": {"kind": "trace_quadratic_het"},
      "optimizer": {"kind": "deva_sinf", "lr": 0.01, "beta1": 0.0, "beta2": 0.99, "beta3": 0.99},
      "steps": 200, "seeds": [1], "batch_size": 1, "log_every": 50})");
    for (auto _ : state) benchmark::DoNotOptimize(run_single(cfg, 1));
}
BENCHMARK(BM_run_single_trace)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
