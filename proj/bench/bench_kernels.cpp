// Serial reference against the OpenMP kernels. Arg(0) is serial, Arg(1) parallel.

#include <benchmark/benchmark.h>

#include "lake/invariant.hpp"
#include "lake/sde.hpp"

using namespace lake;

namespace {

const ValueSolution& solution(double sigma) {
    static const ValueSolution s01 = [] {
        const auto p = validate_params({0.65, 0.5, 0.03, 0.1});
        return solve(build_grid(p, default_right_endpoint(p), 4000), p);
    }();
    static const ValueSolution s008 = [] {
        const auto p = validate_params({0.65, 0.5, 0.03, 0.08});
        return solve(build_grid(p, default_right_endpoint(p), 4000), p);
    }();
    return sigma == 0.1 ? s01 : s008;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_PayoffEnsemble(benchmark::State& state) {
    const auto& s = solution(0.1);
    const SimConfig cfg{1e-2, 1.0, 7, 64};
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_value_mc(s, cfg, 1.0, 1e-3, mode(state)).mean);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(BM_PayoffEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_EscapeEnsemble(benchmark::State& state) {
    const auto& s = solution(0.08);
    static const auto d = invariant_density(s);
    const SimConfig cfg{1e-3, 1e4, 11};
    for (auto _ : state) {
        benchmark::DoNotOptimize(escape_times(s, d, cfg, 16, mode(state)).mean);
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_EscapeEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_SigmaSweep(benchmark::State& state) {
    const SweepSpec spec{SweepParameter::Sigma, linspace(0.05, 0.6, 12)};
    const SweepOptions opts;
    for (auto _ : state) {
        const auto r = state.range(0) ? bifurcation_sweep({0.65, 0.5, 0.03, 0.1}, spec, opts)
                                      : bifurcation_sweep_serial({0.65, 0.5, 0.03, 0.1}, spec, opts);
        benchmark::DoNotOptimize(r.points.size());
    }
    state.SetItemsProcessed(state.iterations() * 12);
}
BENCHMARK(BM_SigmaSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
