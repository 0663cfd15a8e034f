#include <benchmark/benchmark.h>

#include <cmath>

#include "quenchlab/exact.hpp"
#include "quenchlab/monotonicity.hpp"
#include "quenchlab/rupture.hpp"
#include "quenchlab/solver.hpp"
#include "quenchlab/weak.hpp"

using namespace quenchlab;

static void BM_SolverStep2D(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const ModelParams m(3.0, 2);
    const GridSpec g = GridSpec::box(2, -1, 1, cells, 0, 1);
    QuenchSolver solver(m, g, BoundaryData::constant(1.0), SolverConfig{});
    SolverState s{std::vector<double>(g.nodes_per_slab(), 1.0), 0.0};
    for (auto _ : state) {
        s = solver.step(s, 1e-3);
        benchmark::DoNotOptimize(s.values.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.nodes_per_slab()));
}
BENCHMARK(BM_SolverStep2D)->Arg(32)->Arg(64)->Arg(128);

static void BM_QuenchRun1D(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const ModelParams m(3.0, 1);
    const GridSpec g = GridSpec::box(1, -2, 2, cells, 0, 10);
    const SpaceTimeField init = tabulate(
        m, g, {0.0}, [](const SpatialPoint& x, double) { return 1.0 - 0.5 * std::exp(-4.0 * x[0] * x[0]); },
        BoundaryKind::dirichlet_traced);
    for (auto _ : state) {
        QuenchRun run = solve_until_quench(init, BoundaryData::constant(1.0), SolverConfig{});
        benchmark::DoNotOptimize(run.report.steps_taken);
    }
}
BENCHMARK(BM_QuenchRun1D)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_WeightedEnergy2D(benchmark::State& state) {
    const ModelParams m(3.0, 2);
    const SpaceTimeField f = radial_steady_field(m, GridSpec::box(2, -2, 2, state.range(0), -1, 0), linspace(-1, 0, 11));
    const auto x0 = make_point({0.0, 0.0}, 0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(weighted_energy(f, x0, 0.05, WeightSpec{}).value);
    }
}
BENCHMARK(BM_WeightedEnergy2D)->Arg(128)->Arg(256);

static void BM_HolderSeminorm(benchmark::State& state) {
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = ode_field(m, GridSpec::box(1, -2, 2, 64, -1, 0), linspace(-1, 0, 201));
    for (auto _ : state) {
        benchmark::DoNotOptimize(holder_seminorm(f, 0.5, static_cast<std::size_t>(state.range(0)), 1).seminorm);
    }
}
BENCHMARK(BM_HolderSeminorm)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_TwoValuedCheck(benchmark::State& state) {
    const ModelParams m(3.0, 2);
    const SpaceTimeField f = tabulate(m, GridSpec::box(2, -1.25, 1.25, state.range(0), -1, 0), linspace(-1, 0, 33),
                                      [](const SpatialPoint& x, double) { return std::abs(x[0]); });
    const CutoffSpec eta;
    const std::vector<CutoffSpec> etas{eta};
    const SpaceTimeBump psi{eta, -0.5, 0.25, 0.45};
    const std::vector<TestVectorField> ys{TestVectorField::radial(psi)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(two_valued_caloric_check(f, etas, ys).all_passed());
    }
}
BENCHMARK(BM_TwoValuedCheck)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
