#include <benchmark/benchmark.h>

#include <vector>

#include "occuflux/analytics.hpp"
#include "occuflux/rng.hpp"
#include "occuflux/simulator.hpp"
#include "occuflux/stats.hpp"
#include "occuflux/veqn.hpp"

namespace {

occuflux::SystemParams reference(double T) {
    occuflux::SystemParams p;
    p.V = 1.0;
    p.q = 0.25;
    p.H = 0.5;
    p.L = 1.0;
    p.T = T;
    p.box_radius = 10.0;
    return occuflux::validate_params(p);
}

void BM_replica(benchmark::State& state) {
    const occuflux::SystemParams p = reference(static_cast<double>(state.range(0)));
    const std::vector<occuflux::GaussianBump> tests{occuflux::GaussianBump{}};
    const std::vector<double> grid{0.5, 1.0};
    std::uint64_t seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            occuflux::run_replica(p, tests, grid, seed++));
    }
}
BENCHMARK(BM_replica)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_t1_form(benchmark::State& state) {
    const occuflux::SystemParams p = reference(100.0);
    const occuflux::GaussianBump phi;
    for (auto _ : state) {
        benchmark::DoNotOptimize(occuflux::t1_form(p, phi, phi));
    }
}
BENCHMARK(BM_t1_form);

void BM_estimate_cov(benchmark::State& state) {
    occuflux::OccupationSample s;
    s.T = 1.0;
    s.grid = {0.25, 0.5, 0.75, 1.0};
    s.tests = {occuflux::GaussianBump{}};
    s.n_replicas = static_cast<std::size_t>(state.range(0));
    s.values.resize(s.n_replicas * 4);
    occuflux::RngStream rng(9, 0);
    for (double& v : s.values) v = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(occuflux::estimate_cov(s));
    }
}
BENCHMARK(BM_estimate_cov)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_solve_v(benchmark::State& state) {
    const occuflux::SystemParams p = reference(4.0);
    occuflux::ScaledSpaceTimeTest psi;
    psi.time_scale = 4.0;
    psi.amp = 0.5;
    occuflux::SolveOptions opts;
    opts.refine_check = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(occuflux::solve_v(p, psi, 0.0, 4.0, opts));
    }
}
BENCHMARK(BM_solve_v)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
