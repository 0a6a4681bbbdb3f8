#include <benchmark/benchmark.h>

#include "fluxcast/model.hpp"
#include "fluxcast/synth.hpp"

using namespace fluxcast;
using num::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, num::RandomSource& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.at(i) = rng.uniform(-1, 1);
    return m;
}

void bm_matmul(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    num::RandomSource rng(1);
    Matrix a = random_matrix(n, n, rng);
    Matrix b = random_matrix(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(num::matmul(a, b));
    state.SetItemsProcessed(state.iterations() * n * n * n);
}

struct ForwardSetup {
    model::ModelConfig cfg;
    model::ModelParams params;
    graph::AdjacencyMatrix adj;
    data::Window window;
};

ForwardSetup forward_setup(std::size_t d) {
    ForwardSetup s;
    s.cfg.k = 8;
    s.cfg.f = 2;
    s.cfg.d = d;
    s.cfg.m = 2;
    s.cfg.L = 16;
    s.cfg.finalize();
    s.params = model::ModelParams::init(s.cfg, num::RandomSource(2));

    data::SynthConfig sc;
    sc.k = 8;
    sc.f = 2;
    sc.t = 40;
    sc.seed = 3;
    data::SynthResult res = data::synth_generate(sc);
    s.adj = res.truth;
    data::NormStats stats = data::NormStats::compute(res.series);
    s.window = data::make_windows(data::normalize(res.series, stats), s.cfg.L,
                                  s.cfg.tau, s.cfg.m)
                   .front();
    return s;
}

void bm_forward_window(benchmark::State& state) {
    ForwardSetup s = forward_setup(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            model::forward_window(s.window, s.adj, s.params, s.cfg));
}

void bm_window_gradient(benchmark::State& state) {
    ForwardSetup s = forward_setup(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        num::EvalResult er = num::grad_eval(
            [&](num::Tape& t, const std::vector<num::Value>& lv) {
                return model::window_loss_program(t, lv, s.window, s.adj, s.cfg);
            },
            s.params.set);
        benchmark::DoNotOptimize(er.value);
    }
}

void bm_synth_generate(benchmark::State& state) {
    data::SynthConfig sc;
    sc.k = 8;
    sc.f = 2;
    sc.t = static_cast<std::size_t>(state.range(0));
    sc.seed = 4;
    for (auto _ : state) benchmark::DoNotOptimize(data::synth_generate(sc));
    state.SetItemsProcessed(state.iterations() * sc.t);
}

} // namespace

BENCHMARK(bm_matmul)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(bm_forward_window)->Arg(16)->Arg(64);
BENCHMARK(bm_window_gradient)->Arg(16)->Arg(64);
BENCHMARK(bm_synth_generate)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
