// Microbenchmarks for the training hot path: dense kernels, the taped loss
// graph, determinant adjoints and the evaluation-side KDE.

#include <benchmark/benchmark.h>

#include "prnf/density.hpp"
#include "prnf/flow.hpp"
#include "prnf/problems.hpp"
#include "prnf/rng.hpp"
#include "prnf/tape.hpp"
#include "prnf/training.hpp"

#include <vector>

using namespace prnf;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
    Matrix m(r, c);
    Rng rng(seed);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

PrNfModel bench_model(int d, int s, int hidden) {
    NormStats norm;
    norm.x_mean.assign(static_cast<std::size_t>(d), 0.0);
    norm.x_std.assign(static_cast<std::size_t>(d), 1.0);
    norm.y_mean.assign(static_cast<std::size_t>(s), 0.0);
    norm.y_std.assign(static_cast<std::size_t>(s), 1.0);
    return make_model(d, s, hidden, 80.0, Direction::Forward, norm, 42);
}

void bm_matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Matrix a = random_matrix(256, n, 1), b = random_matrix(n, n, 2);
    for (auto _ : state) {
        Matrix c = matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * 256 * n * n);
}

void bm_mlp_forward(benchmark::State& state) {
    const int hidden = static_cast<int>(state.range(0));
    MlpParams p = mlp_init({21, hidden, 1, Activation::Tanh}, 7);
    const Matrix x = random_matrix(256, 21, 3);
    for (auto _ : state) {
        Matrix y = mlp_forward(p, x);
        benchmark::DoNotOptimize(y.data());
    }
}

// One full loss evaluation plus backward over a 256-row batch, the unit of
// work each Adam step repeats per chunk.
void bm_loss_backward(benchmark::State& state) {
    const int hidden = static_cast<int>(state.range(0));
    PrNfModel m = bench_model(1, 1, hidden);
    const Matrix cond = random_matrix(256, 1, 5);
    const Matrix target = random_matrix(256, 1, 6);
    for (auto _ : state) {
        Tape tape;
        const NodeId l1 = loss_nll(tape, m, cond, target, Singularity::SkipSample);
        const NodeId l2 = loss_rev(tape, m, cond, target, Singularity::SkipSample);
        const NodeId total = tape.record_add(l1, tape.record_scale(l2, m.lambda));
        GradientBundle g = tape.backward(total);
        benchmark::DoNotOptimize(g.at(kHW1).data());
    }
}

void bm_logabsdet(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(11);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-0.5, 0.5) + (i == j ? 2.0 : 0.0);
    for (auto _ : state) {
        Tape tape;
        const LogDet ld = tape.record_logabsdet(tape.leaf(0, a));
        GradientBundle g = tape.backward(ld.node);
        benchmark::DoNotOptimize(g.at(0).data());
    }
}

void bm_kde_logpdf(benchmark::State& state) {
    const long n = state.range(0);
    Dataset data = gen_1d({Func1D::Sin, noise_gaussian(0.15)}, n, 3);
    Matrix joint(data.cond.rows(), 2);
    for (int i = 0; i < joint.rows(); ++i) {
        joint(i, 0) = data.cond(i, 0);
        joint(i, 1) = data.target(i, 0);
    }
    KdeModel kde = kde_fit(joint, BandwidthRule::Scott);
    const std::vector<double> q = {0.4, 0.6};
    for (auto _ : state) benchmark::DoNotOptimize(kde_logpdf(kde, q.data()));
    state.SetItemsProcessed(state.iterations() * n);
}

void bm_sample_conditional(benchmark::State& state) {
    PrNfModel m = bench_model(1, 1, 256);
    const std::vector<double> x = {0.4};
    for (auto _ : state) {
        Matrix s = sample_conditional(m, x, state.range(0), 99);
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(bm_matmul)->Arg(64)->Arg(256)->Arg(600);
BENCHMARK(bm_mlp_forward)->Arg(256)->Arg(600);
BENCHMARK(bm_loss_backward)->Arg(64)->Arg(256);
BENCHMARK(bm_logabsdet)->Arg(2)->Arg(5)->Arg(8);
BENCHMARK(bm_kde_logpdf)->Arg(1000)->Arg(20000);
BENCHMARK(bm_sample_conditional)->Arg(1000);

} // namespace

BENCHMARK_MAIN();
