// Microbenchmarks for the sweep engine hot loops: coefficient evaluation,
// oscillator stepping, exponent quadrature and grid maximization.

#include <benchmark/benchmark.h>

#include <cmath>

#include "losslab/activators.hpp"
#include "losslab/grid.hpp"
#include "losslab/oscillator.hpp"
#include "losslab/speeds.hpp"

using namespace losslab;

namespace {

const CutoffFunction& theta() {
    static const CutoffFunction th;
    return th;
}

void bm_model_speed_eval(benchmark::State& state) {
    const PropagationSpeed c = model_speed_alpha(0.5, 0.5);
    const auto grid = log_grid(1e-6, 0.5, 4096);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(c.value(grid[i % grid.size()]));
        benchmark::DoNotOptimize(c.d1(grid[i % grid.size()]));
        ++i;
    }
}
BENCHMARK(bm_model_speed_eval);

void bm_activator_eval(benchmark::State& state) {
    const PropagationSpeed host = constant_speed(1.0, 0.5);
    const ActivatorWindow w = schedule_c1(1e5, 1.0, RateFunction::log());
    const PropagationSpeed cl = build_activator(host, w, theta());
    const auto grid = linear_grid(w.a, w.b, 4096);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cl.value(grid[i % grid.size()]));
        ++i;
    }
}
BENCHMARK(bm_activator_eval);

void bm_integrate_window(benchmark::State& state) {
    const double lambda = std::pow(10.0, state.range(0));
    const PropagationSpeed host = constant_speed(1.0, 0.5);
    const ActivatorWindow w = schedule_c1(lambda, 1.0, RateFunction::log());
    const PropagationSpeed cl = build_activator(host, w, theta());
    IntegrateOptions opt;
    opt.tol = 1e-9;
    for (auto _ : state) {
        const Trajectory tr =
            integrate(cl, lambda, {0.0, 0.0, 1.0, 0.0, lambda}, w.b, {{w.b}}, opt);
        benchmark::DoNotOptimize(tr.states.back().v);
    }
}
BENCHMARK(bm_integrate_window)->Arg(4)->Arg(5);

void bm_activation_integral(benchmark::State& state) {
    const double lambda = std::pow(10.0, state.range(0));
    const ActivatorWindow w = schedule_c1(lambda, 1.0, RateFunction::log());
    for (auto _ : state) {
        benchmark::DoNotOptimize(activation_integral(w, theta(), w.b));
    }
}
BENCHMARK(bm_activation_integral)->Arg(4)->Arg(5)->Arg(6);

void bm_distance_grid(benchmark::State& state) {
    const SpeedClassSpec spec{0.5, 3.5, 0.5, RateFunction::log(),
                              RateFunction::constant(1.0), 1.0, 1};
    const PropagationSpeed a = model_speed_alpha(0.0, 0.5);
    const PropagationSpeed b = model_speed_alpha(0.5, 0.5);
    const auto grid = log_grid(1e-6, 0.5, 1 << state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(distance_ps1(a, b, spec, grid));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(grid.size()));
}
BENCHMARK(bm_distance_grid)->Arg(14)->Arg(17);

}  // namespace

BENCHMARK_MAIN();
