#include "pnlss/model.hpp"
#include "pnlss/optimizer.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace pnlss;

namespace {

PnlssModel duffing_like_model() {
    Matrix A(2, 2), B(2, 1), C(1, 2), D(1, 1);
    A << 0.6, -0.35, 0.35, 0.6;
    B << 1.0, 0.3;
    C << 0.7, -0.4;
    D << 0.1;
    PnlssModel m = init_from_linear({A, B, C, D}, {2, 3}, {2, 3}, ActiveSelection::states_only(),
                                    ActiveSelection::none());
    m.set_E(0, 0, 0.05);
    m.set_E(1, 6, 0.01);
    return m;
}

Matrix noise_input(Eigen::Index T) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 0.5);
    Matrix u(T, 1);
    for (auto& v : u.reshaped()) v = nd(rng);
    return u;
}

void BM_Simulate(benchmark::State& state) {
    const PnlssModel m = duffing_like_model();
    const Matrix u = noise_input(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(m, u));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->RangeMultiplier(4)->Range(1024, 65536);

void BM_Jacobian(benchmark::State& state) {
    const PnlssModel m = duffing_like_model();
    const Matrix u = noise_input(state.range(0));
    const SimulationResult sim = simulate(m, u);
    for (auto _ : state) benchmark::DoNotOptimize(jacobian(m, u, sim));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Jacobian)->RangeMultiplier(4)->Range(1024, 16384);

void BM_BuildBasis(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_basis(n, 1, {2, 3, 4, 5}));
}
BENCHMARK(BM_BuildBasis)->DenseRange(2, 8, 2);

void BM_LmIteration(benchmark::State& state) {
    const PnlssModel truth = duffing_like_model();
    const auto N = static_cast<std::size_t>(state.range(0));
    const Matrix period = noise_input(static_cast<Eigen::Index>(N));
    Matrix u(2 * period.rows(), 1);
    u << period, period;
    DataRecord rec(1, 1, N, 1, 1, 1.0, true);
    rec.u(0, 0) = period;
    rec.y(0, 0) = simulate(truth, u).y.bottomRows(period.rows());
    const ConcatenatedRecord data = concatenate({rec}, N, 0);
    PnlssModel start = truth;
    start.set_E(Matrix::Zero(truth.E().rows(), truth.E().cols()));
    LmConfig cfg;
    cfg.max_iterations = 1;
    for (auto _ : state) benchmark::DoNotOptimize(optimize(start, data, cfg));
}
BENCHMARK(BM_LmIteration)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

} // namespace
