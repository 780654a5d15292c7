#include "oracles.hpp"

#include "pnlss/duffing.hpp"
#include "pnlss/errors.hpp"
#include "pnlss/frf.hpp"
#include "pnlss/signalgen.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

using namespace pnlss;

namespace {

DuffingParams linear_resonator() {
    DuffingParams p = default_benchmark().params;
    p.beta = 0.0;
    p.noise_std = 0.0;
    return p;
}

// Steady-state Y(k)/U(k) of the last period after `settle` periods.
std::vector<oracle::cplx> measured_frf(const DuffingParams& p, const MultisineConfig& ms, std::size_t settle,
                                       InputHold hold, LineSet& lines) {
    MultisineConfig c = ms;
    c.P = settle + 1;
    const ExcitationSignal sig = generate_multisine(c).front();
    const Vector y = simulate_duffing(p, sig.samples, 20, hold);
    const auto N = static_cast<Eigen::Index>(c.N);
    const auto U = oracle::naive_dft(oracle::to_std(sig.samples.tail(N)));
    const auto Y = oracle::naive_dft(oracle::to_std(y.tail(N)));
    lines = sig.excited_lines;
    std::vector<oracle::cplx> G;
    for (int k : lines) G.push_back(Y[static_cast<std::size_t>(k)] / U[static_cast<std::size_t>(k)]);
    return G;
}

MultisineConfig band_config() {
    MultisineConfig c;
    c.N = 1024;
    c.fs = 1000.0;
    c.grid = ExcitationGrid::odd();
    c.f_max_ratio = 0.2;
    c.R = 1;
    c.rms = 1.0e4;
    c.seed = 3;
    return c;
}

double cubic_equilibrium(const DuffingParams& p, double u0) {
    double y = u0 / p.alpha;
    for (int i = 0; i < 100; ++i) y -= (p.alpha * y + p.beta * y * y * y - u0) / (p.alpha + 3.0 * p.beta * y * y);
    return y;
}

} // namespace

TEST_SUITE("duffing") {

TEST_CASE("linear resonator with band-limited input matches the continuous FRF") {
    const DuffingParams p = linear_resonator();
    LineSet lines;
    const auto G = measured_frf(p, band_config(), 5, InputHold::Bandlimited, lines);
    double worst = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const oracle::cplx s(0.0, 2.0 * std::numbers::pi * p.fs * lines[i] / 1024.0);
        const oracle::cplx G0 = 1.0 / (p.mass * s * s + p.damping * s + p.alpha);
        worst = std::max(worst, std::abs(G[i] - G0) / std::abs(G0));
    }
    CHECK(worst < 0.005);
}

TEST_CASE("linear resonator with zero-order hold matches the exact ZOH discretization") {
    const DuffingParams p = linear_resonator();
    LineSet lines;
    const auto G = measured_frf(p, band_config(), 5, InputHold::ZeroOrder, lines);
    // Augmented exponential gives the exact sampled-data model.
    Matrix M = Matrix::Zero(3, 3);
    M << 0.0, 1.0, 0.0, -p.alpha / p.mass, -p.damping / p.mass, 1.0 / p.mass, 0.0, 0.0, 0.0;
    const Matrix Phi = (M / p.fs).exp();
    const Matrix Ad = Phi.topLeftCorner(2, 2), Bd = Phi.topRightCorner(2, 1);
    Matrix C(1, 2), D = Matrix::Zero(1, 1);
    C << 1.0, 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto G0 = oracle::transfer(Ad, Bd, C, D, oracle::unit_point(lines[i], 1024))(0, 0);
        worst = std::max(worst, std::abs(G[i] - G0) / std::abs(G0));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("constant force settles on the cubic equilibrium") {
    DuffingParams p = default_benchmark().params;
    p.noise_std = 0.0;
    for (double u0 : {1.0e3, 5.0e3, 2.0e4}) {
        const Vector y = simulate_duffing(p, Vector::Constant(3000, u0), 20);
        CHECK(std::abs(y(y.size() - 1) - cubic_equilibrium(p, u0)) < 1e-6);
    }
}

TEST_CASE("RK4 error shrinks sixteen-fold when the step halves") {
    DuffingParams p = default_benchmark().params;
    p.noise_std = 0.0;
    MultisineConfig c = band_config();
    c.N = 512;
    c.rms = 3.0e4;
    const Vector u = generate_multisine(c).front().samples;
    const Vector ref = simulate_duffing(p, u, 160);
    const double e1 = (simulate_duffing(p, u, 4) - ref).cwiseAbs().maxCoeff();
    const double e2 = (simulate_duffing(p, u, 8) - ref).cwiseAbs().maxCoeff();
    const double ratio = e1 / e2;
    CAPTURE(ratio);
    CHECK(ratio >= 8.0);
    CHECK(ratio <= 32.0);
}

TEST_CASE("noiseless oracle is deterministic and linear when beta is zero") {
    DuffingParams p = default_benchmark().params;
    p.noise_std = 0.0;
    const Vector u = generate_multisine(band_config()).front().samples;
    CHECK(simulate_duffing(p, u) == simulate_duffing(p, u));
    const DuffingParams lin = linear_resonator();
    const Vector y1 = simulate_duffing(lin, u);
    const Vector y2 = simulate_duffing(lin, Vector(2.0 * u));
    CHECK(y2 == Vector(2.0 * y1));
}

TEST_CASE("seeded output noise") {
    DuffingParams p = default_benchmark().params;
    const Vector u = Vector::Zero(20000);
    const Vector y = simulate_duffing(p, u);
    const double sd = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
    CHECK(std::abs(sd / p.noise_std - 1.0) < 0.05);
    CHECK(simulate_duffing(p, u) == y);
    p.seed += 1;
    CHECK(simulate_duffing(p, u) != y);
}

TEST_CASE("default benchmark: shapes, steady state and validation envelope") {
    const BenchmarkConfig cfg = default_benchmark();
    const Benchmark b = make_benchmark(cfg);
    CHECK(b.train.realizations() == 4);
    CHECK(b.train.periods() == 4);
    CHECK(b.train.samples() == 2048);
    CHECK(b.train.inputs() == 1);
    CHECK(b.train.outputs() == 1);
    CHECK(b.max_period_deviation < 1e-6);
    CHECK(b.validation.total_samples() == cfg.val_length);
    CHECK(b.validation.t2 == cfg.val_t2);

    // Rolling RMS of the validation input grows linearly at the configured rate.
    const Eigen::Index L = b.validation.u.rows(), win = 256;
    std::vector<double> t, r;
    for (Eigen::Index s = 0; s + win <= L; s += win / 2) {
        const auto seg = b.validation.u.col(0).segment(s, win);
        t.push_back((static_cast<double>(s) + 0.5 * static_cast<double>(win - 1)) / cfg.params.fs);
        r.push_back(std::sqrt(seg.squaredNorm() / static_cast<double>(win)));
    }
    const double n = static_cast<double>(t.size());
    double st = 0, sr = 0, stt = 0, str = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sr += r[i];
        stt += t[i] * t[i];
        str += t[i] * r[i];
    }
    const double slope = (n * str - st * sr) / (n * stt - st * st);
    const double expected = (cfg.val_a_end - cfg.val_a_start) / (static_cast<double>(L - 1) / cfg.params.fs);
    CHECK(slope > 0.0);
    CHECK(std::abs(slope / expected - 1.0) < 0.10);
    CHECK(cfg.val_a_end > cfg.train.rms);
}

TEST_CASE("cubic hardening produces odd-only distortion") {
    BenchmarkConfig cfg = default_benchmark();
    cfg.params.noise_std = 0.0;
    cfg.train.grid = ExcitationGrid::random_odd(4);
    cfg.train.R = 2;
    cfg.train.P = 2;
    const Benchmark b = make_benchmark(cfg);
    const DistortionSpectrum s = classify_distortions(b.train);
    CHECK(s.mean_level(LineClass::UnexcitedOdd) >= 50.0 * s.mean_level(LineClass::UnexcitedEven));
}

TEST_CASE("divergence is an error naming the sample") {
    DuffingParams p = default_benchmark().params;
    p.beta = -1.0e6;
    p.noise_std = 0.0;
    try {
        simulate_duffing(p, Vector::Constant(2000, 1.0e6));
        FAIL("expected divergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("sample") != std::string::npos);
    }
}

TEST_CASE("parameter and config validation") {
    DuffingParams p;
    p.mass = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = DuffingParams{};
    p.fs = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK_THROWS_AS(simulate_duffing(DuffingParams{}, Vector::Zero(4), 0), ConfigError);

    BenchmarkConfig cfg = default_benchmark();
    cfg.val_a_end = cfg.val_a_start;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = default_benchmark();
    cfg.train.fs = 500.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("Gaussian noise statistics") {
    const Vector g = gaussian_noise(100001, 2.0, 99);
    const double mean = g.mean();
    const double sd = std::sqrt((g.array() - mean).square().sum() / static_cast<double>(g.size() - 1));
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(sd - 2.0) < 0.03);
    CHECK(gaussian_noise(10, 1.0, 1) == gaussian_noise(10, 1.0, 1));
}

}
