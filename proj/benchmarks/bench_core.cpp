#include "pfpp/cmim_solver.hpp"
#include "pfpp/deconv.hpp"
#include "pfpp/engine.hpp"
#include "pfpp/fft.hpp"
#include "pfpp/sim.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <complex>

using namespace pfpp;

namespace {

RiskAversionMeasure atom_mixture() {
    return RiskAversionMeasure({{1.5, 0.3}, {2.0, 0.3}, {2.7, 0.4}}, {}, 1.2, 3.2);
}

RiskAversionMeasure with_cell() {
    return RiskAversionMeasure({{1.6, 0.4}}, {{1.9, 2.3, 0.5}}, 1.2, 3.2);
}

const KernelLaw bs_law = kernel_from_bs({{0.3}, {}});
const KernelLaw bin_law = kernel_from_binomial({{{1.2, 0.9, 0.6}, {1.1, 0.95, 0.5}}});

} // namespace

static void BM_CmimEvalAtoms(benchmark::State& state) {
    const RiskAversionMeasure m = atom_mixture();
    double y = 0.37;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cmim_eval(m, y));
        y = (y < 100.0) ? y * 1.37 : 0.011;
    }
}
BENCHMARK(BM_CmimEvalAtoms);

static void BM_CmimEvalWithCell(benchmark::State& state) {
    const RiskAversionMeasure m = with_cell();
    double y = 0.37;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cmim_eval(m, y));
        y = (y < 100.0) ? y * 1.37 : 0.011;
    }
}
BENCHMARK(BM_CmimEvalWithCell);

static void BM_Invert(benchmark::State& state) {
    const InverseMarginal im = InverseMarginal::from_measure(atom_mixture());
    double x = 0.2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(im.invert(x));
        x = (x < 50.0) ? x * 1.618 : 0.07;
    }
}
BENCHMARK(BM_Invert);

static void BM_SolvePeriodAtoms(benchmark::State& state) {
    const RiskAversionMeasure m = atom_mixture();
    for (auto _ : state) benchmark::DoNotOptimize(solve_period(m, bs_law));
}
BENCHMARK(BM_SolvePeriodAtoms);

static void BM_SolvePeriodWithCell(benchmark::State& state) {
    const RiskAversionMeasure m = with_cell();
    for (auto _ : state) benchmark::DoNotOptimize(solve_period(m, bin_law));
}
BENCHMARK(BM_SolvePeriodWithCell);

static void BM_PeriodResidual(benchmark::State& state) {
    const RiskAversionMeasure m = with_cell();
    const RiskAversionMeasure out = solve_period(m, bs_law);
    const auto grid = default_y_grid();
    for (auto _ : state)
        benchmark::DoNotOptimize(period_residual(out, m, bs_law, grid).max_rel_err);
}
BENCHMARK(BM_PeriodResidual);

static void BM_Fft(benchmark::State& state) {
    std::vector<std::complex<double>> data(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = {std::sin(0.01 * static_cast<double>(i)), 0.0};
    for (auto _ : state) {
        fft_inplace(data, false);
        fft_inplace(data, true);
        benchmark::DoNotOptimize(data.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

static void BM_DeconvSolve(benchmark::State& state) {
    DeconvConfig cfg;
    cfg.gamma1 = 1.5;
    cfg.gamma2 = 3.5;
    cfg.n_points = static_cast<std::size_t>(state.range(0));
    const InverseMarginal i0 = InverseMarginal::from_measure(
        RiskAversionMeasure({{2.0, 0.5}, {3.0, 0.5}}, {}, 1.5, 3.5));
    for (auto _ : state) benchmark::DoNotOptimize(deconv_solve(i0, bs_law, cfg).i1.value(1.0));
}
BENCHMARK(BM_DeconvSolve)->Arg(1 << 13)->Arg(1 << 14)->Arg(1 << 15);

static void BM_AdvanceChain(benchmark::State& state) {
    const InverseMarginal i0 = InverseMarginal::from_measure(atom_mixture());
    for (auto _ : state) {
        PfppState chain = PfppState::initial(i0, 0.0);
        chain = chain.advance(BsPeriodParams{{0.3}, {}});
        chain = chain.advance(BinomialPeriodParams{{{1.2, 0.9, 0.6}}});
        chain = chain.advance(BsPeriodParams{{0.25}, {}});
        benchmark::DoNotOptimize(chain.anchor(3));
    }
}
BENCHMARK(BM_AdvanceChain);

static void BM_MonteCarloPaths(benchmark::State& state) {
    ScenarioSpec spec;
    spec.horizon = 1;
    spec.source = FixedThetas{{BsPeriodParams{{0.3}, {}}}};
    spec.seed = 7;
    const InverseMarginal i0 = InverseMarginal::from_measure(atom_mixture());
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        double acc = 0.0;
        run_paths(spec, i0, 1.0, n, SolverRoute::Auto,
                  [&](PathRecord&& r) { acc += r.terminal_wealth(); });
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(n) * state.iterations());
}
BENCHMARK(BM_MonteCarloPaths)->Arg(1 << 10)->Arg(1 << 14);

BENCHMARK_MAIN();
