#include <benchmark/benchmark.h>

#include "stnn/kernels.hpp"
#include "stnn/model.hpp"
#include "stnn/rng.hpp"

using namespace stnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (auto& v : m.data()) v = rng.normal();
    return m;
}

template <void (*Kernel)(const Matrix&, const Matrix&, Matrix&)>
void BM_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
    Matrix out;
    for (auto _ : state) {
        Kernel(a, b, out);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <void (*Kernel)(const Matrix&, Matrix&)>
void BM_tanh(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, n, 3);
    Matrix out;
    for (auto _ : state) {
        Kernel(a, out);
        benchmark::DoNotOptimize(out.data().data());
    }
}

void BM_gradients(benchmark::State& state) {
    const auto exec = state.range(0) == 0 ? Execution::serial : Execution::parallel;
    const std::size_t n = 50, m = 1, N = 10, T = 200;
    Rng rng(4);
    RelationSet rel(n);
    Matrix w(n, n);
    for (auto& v : w.data()) v = rng.uniform() < 0.1 ? 1.0 : 0.0;
    rel.add({"w", row_normalize(w), Provenance::normalized_raw});
    const auto s = init_model(n, m, N, rel, Variant::stnn_r, T, Rng(5));
    SeriesTensor x(T, n, m);
    for (auto& v : x.values()) v = rng.uniform();
    for (auto _ : state) {
        auto g = gradients(x, s.latent, s.params, rel, Variant::stnn_r, {1.0, 0.01}, std::nullopt, exec);
        benchmark::DoNotOptimize(g.params.theta0.data().data());
    }
    state.SetLabel(exec == Execution::serial ? "serial" : "parallel");
}

}  // namespace

BENCHMARK(BM_matmul<kernels::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_matmul<kernels::omp::matmul>)->Name("matmul/omp")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_matmul<kernels::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(256);
BENCHMARK(BM_matmul<kernels::omp::matmul_tn>)->Name("matmul_tn/omp")->Arg(256);
BENCHMARK(BM_tanh<kernels::serial::map_tanh>)->Name("tanh/serial")->Arg(512);
BENCHMARK(BM_tanh<kernels::omp::map_tanh>)->Name("tanh/omp")->Arg(512);
BENCHMARK(BM_gradients)->Name("gradients")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
