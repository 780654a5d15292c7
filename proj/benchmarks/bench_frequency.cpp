#include "pnlss/frf.hpp"
#include "pnlss/signalgen.hpp"
#include "pnlss/spectral.hpp"
#include "pnlss/state_space.hpp"

#include <benchmark/benchmark.h>

using namespace pnlss;

namespace {

void BM_Dft(benchmark::State& state) {
    const Vector x = Vector::LinSpaced(state.range(0), -1.0, 1.0).array().sin();
    for (auto _ : state) benchmark::DoNotOptimize(spectral::dft(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Dft)->RangeMultiplier(4)->Range(256, 65536);

void BM_Multisine(benchmark::State& state) {
    MultisineConfig c;
    c.N = static_cast<std::size_t>(state.range(0));
    c.R = 4;
    c.P = 4;
    c.f_max_ratio = 0.4;
    for (auto _ : state) benchmark::DoNotOptimize(generate_multisine(c));
}
BENCHMARK(BM_Multisine)->Arg(1024)->Arg(8192);

void BM_Bla(benchmark::State& state) {
    MultisineConfig c;
    c.N = static_cast<std::size_t>(state.range(0));
    c.R = 8;
    c.P = 4;
    c.grid = ExcitationGrid::odd();
    c.f_max_ratio = 0.4;
    const auto sigs = generate_multisine(c);
    Matrix A(2, 2), B(2, 1), C(1, 2), D(1, 1);
    A << 0.6, -0.3, 0.3, 0.5;
    B << 1.0, 0.4;
    C << 0.8, -0.2;
    D << 0.1;
    const LinearStateSpace sys{A, B, C, D};
    const auto N = static_cast<Eigen::Index>(c.N);
    DataRecord rec(c.R, c.P, c.N, 1, 1, 1.0, true, sigs.front().excited_lines);
    for (std::size_t r = 0; r < c.R; ++r) {
        const Matrix y = simulate_linear(sys, sigs[r].samples);
        for (std::size_t p = 0; p < c.P; ++p) {
            rec.u(r, p) = sigs[r].samples.segment(static_cast<Eigen::Index>(p) * N, N);
            rec.y(r, p) = y.middleRows(static_cast<Eigen::Index>(p) * N, N);
        }
    }
    for (auto _ : state) benchmark::DoNotOptimize(estimate_bla(rec));
}
BENCHMARK(BM_Bla)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

} // namespace
