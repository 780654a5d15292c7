#include "pnlss/duffing.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace pnlss {

void DuffingParams::validate() const {
    if (!(mass > 0.0)) throw ConfigError("duffing: mass must be positive");
    if (!(fs > 0.0)) throw ConfigError("duffing: fs must be positive");
    if (!(damping >= 0.0)) throw ConfigError("duffing: damping must be non-negative");
    if (!(noise_std >= 0.0)) throw ConfigError("duffing: noise_std must be non-negative");
}

namespace {

struct State {
    double y, v;
};

struct Rhs {
    const DuffingParams& p;
    State operator()(const State& s, double u) const {
        const double stiffness = p.alpha + p.beta * s.y * s.y;
        return {s.v, (u - p.damping * s.v - stiffness * s.y) / p.mass};
    }
};

// Input on the half-step grid: entry 2*(k*substeps + j) + h is u at t_k + (j + h/2) dt.
Vector bandlimited_grid(const Eigen::Ref<const Vector>& u, int substeps) {
    const auto N = u.size();
    const auto L = static_cast<Eigen::Index>(2 * substeps) * N;
    const CVector U = spectral::dft(u);
    CVector up = CVector::Zero(L);
    const Eigen::Index half = (N - 1) / 2;
    up(0) = U(0);
    for (Eigen::Index k = 1; k <= half; ++k) {
        up(k) = U(k);
        up(L - k) = U(N - k);
    }
    if (N % 2 == 0) {
        // Split the Nyquist bin symmetrically.
        up(N / 2) = 0.5 * U(N / 2);
        up(L - N / 2) = 0.5 * U(N / 2);
    }
    return spectral::idft_real(up) * static_cast<double>(L) / static_cast<double>(N);
}

} // namespace

Vector gaussian_noise(std::size_t count, double stddev, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Vector out(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; i += 2) {
        double u1 = spectral::unit_uniform(gen());
        const double u2 = spectral::unit_uniform(gen());
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out(static_cast<Eigen::Index>(i)) = stddev * radius * std::cos(angle);
        if (i + 1 < count) out(static_cast<Eigen::Index>(i + 1)) = stddev * radius * std::sin(angle);
    }
    return out;
}

Vector simulate_duffing(const DuffingParams& params, const Eigen::Ref<const Vector>& u, int substeps,
                        InputHold hold) {
    params.validate();
    if (substeps < 1) throw ConfigError("simulate_duffing: substeps must be >= 1");
    if (!u.allFinite()) throw ConfigError("simulate_duffing: input is not finite");

    const Rhs f{params};
    const double dt = 1.0 / (params.fs * substeps);
    const Vector grid = hold == InputHold::Bandlimited ? bandlimited_grid(u, substeps) : Vector();
    auto input_at = [&](Eigen::Index k, int j, int halfstep) {
        if (hold == InputHold::ZeroOrder) return u(k);
        return grid(2 * (k * substeps + j) + halfstep);
    };

    Vector y(u.size());
    State s{0.0, 0.0};
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        y(k) = s.y;
        for (int j = 0; j < substeps; ++j) {
            const double u0 = input_at(k, j, 0);
            const double um = input_at(k, j, 1);
            const double u1 = j + 1 < substeps ? input_at(k, j + 1, 0)
                              : k + 1 < u.size() ? input_at(k + 1, 0, 0)
                                                 : input_at(0, 0, 0);
            const double u_end = hold == InputHold::ZeroOrder ? u(k) : u1;
            const State k1 = f(s, u0);
            const State k2 = f({s.y + 0.5 * dt * k1.y, s.v + 0.5 * dt * k1.v}, um);
            const State k3 = f({s.y + 0.5 * dt * k2.y, s.v + 0.5 * dt * k2.v}, um);
            const State k4 = f({s.y + dt * k3.y, s.v + dt * k3.v}, u_end);
            s.y += dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
            s.v += dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        }
        if (!std::isfinite(s.y) || !std::isfinite(s.v))
            throw NumericalError("simulate_duffing: state diverged at sample " + std::to_string(k + 1) +
                                 "; lower the input amplitude");
    }
    if (params.noise_std > 0.0) y += gaussian_noise(static_cast<std::size_t>(y.size()), params.noise_std, params.seed);
    return y;
}

void BenchmarkConfig::validate() const {
    params.validate();
    train.validate();
    if (train.grid.kind == GridKind::Full) throw ConfigError("benchmark: training grid must be odd or random-odd");
    if (train.P < 2) throw ConfigError("benchmark: need at least two retained periods");
    if (val_length < 2) throw ConfigError("benchmark: validation length must be >= 2");
    if (val_t2 >= val_length) throw ConfigError("benchmark: validation t2 exceeds its length");
    if (!(val_a_start >= 0.0) || !(val_a_end > val_a_start))
        throw ConfigError("benchmark: validation envelope must grow");
    if (train.fs != params.fs) throw ConfigError("benchmark: multisine and oscillator sample rates differ");
    if (substeps < 1) throw ConfigError("benchmark: substeps must be >= 1");
}

BenchmarkConfig default_benchmark() {
    BenchmarkConfig c;
    c.params.mass = 1.0;
    c.params.alpha = std::pow(2.0 * std::numbers::pi * 50.0, 2);
    c.params.damping = 2.0 * 0.05 * 2.0 * std::numbers::pi * 50.0;
    c.params.beta = 1.2e4;
    c.params.fs = 1000.0;
    c.params.noise_std = 0.0075; // about 40 dB output SNR at the training amplitude
    c.params.seed = 2024;

    c.train.N = 2048;
    c.train.fs = c.params.fs;
    c.train.grid = ExcitationGrid::odd();
    c.train.f_max_ratio = 0.2;
    c.train.R = 4;
    c.train.P = 4;
    c.train.rms = 3.0e4;
    c.train.seed = 2024;

    c.settle_periods = 3;
    c.val_a_start = 0.2 * c.train.rms;
    c.val_a_end = 1.5 * c.train.rms;
    c.val_length = 8192;
    c.val_t2 = 256;
    c.substeps = 20;
    return c;
}

Benchmark make_benchmark(const BenchmarkConfig& config) {
    config.validate();
    const auto N = static_cast<Eigen::Index>(config.train.N);
    const auto P = static_cast<Eigen::Index>(config.train.P);
    const auto settle = static_cast<Eigen::Index>(config.settle_periods);

    MultisineConfig ms = config.train;
    ms.P = config.settle_periods + config.train.P;
    const auto signals = generate_multisine(ms);

    Benchmark out;
    out.train = DataRecord(config.train.R, config.train.P, config.train.N, 1, 1, config.params.fs, true,
                           signals.front().excited_lines);
    out.train.grid = config.train.grid;

    DuffingParams noiseless = config.params;
    noiseless.noise_std = 0.0;
    for (std::size_t r = 0; r < config.train.R; ++r) {
        const Vector y_all = simulate_duffing(noiseless, signals[r].samples, config.substeps);
        const Vector y = y_all.tail(P * N);
        const double rms = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
        const auto last = y.tail(N);
        for (Eigen::Index per = 0; per + 1 < P; ++per)
            out.max_period_deviation =
                std::max(out.max_period_deviation, (y.segment(per * N, N) - last).cwiseAbs().maxCoeff() / rms);

        Vector noisy = y;
        if (config.params.noise_std > 0.0)
            noisy += gaussian_noise(static_cast<std::size_t>(y.size()), config.params.noise_std,
                                    spectral::mix_seed(config.params.seed, r));
        for (Eigen::Index per = 0; per < P; ++per) {
            out.train.u(r, static_cast<std::size_t>(per)) = signals[r].samples.segment((settle + per) * N, N);
            out.train.y(r, static_cast<std::size_t>(per)) = noisy.segment(per * N, N);
        }
    }
    if (out.max_period_deviation > 1e-6)
        throw NumericalError("make_benchmark: retained periods are not in steady state (deviation " +
                             std::to_string(out.max_period_deviation) + "); increase settle_periods");

    // Validation: Gaussian noise restricted to the training band, linearly growing envelope.
    const auto L = static_cast<Eigen::Index>(config.val_length);
    const int band = config.train.max_line();
    const Vector white = gaussian_noise(config.val_length, 1.0, spectral::mix_seed(config.params.seed, 0xfa11ULL));
    CVector W = spectral::dft(white);
    // Map the training band onto the validation record's frequency grid.
    const double band_hz = config.train.fs * band / static_cast<double>(config.train.N);
    for (Eigen::Index k = 0; k < L; ++k) {
        const Eigen::Index folded = std::min(k, L - k);
        const double f = config.params.fs * static_cast<double>(folded) / static_cast<double>(L);
        if (folded == 0 || f > band_hz) W(k) = 0.0;
    }
    Vector shaped = spectral::idft_real(W);
    shaped /= std::sqrt(shaped.squaredNorm() / static_cast<double>(L));
    Vector u_val(L);
    for (Eigen::Index t = 0; t < L; ++t) {
        const double frac = L > 1 ? static_cast<double>(t) / static_cast<double>(L - 1) : 0.0;
        u_val(t) = (config.val_a_start + (config.val_a_end - config.val_a_start) * frac) * shaped(t);
    }
    DuffingParams val_params = config.params;
    val_params.seed = spectral::mix_seed(config.params.seed, 0x7a1ULL);
    const Vector y_val = simulate_duffing(val_params, u_val, config.substeps);
    out.validation = single_segment(u_val, y_val, config.params.fs, config.val_t2);
    return out;
}

Benchmark make_benchmark(const DuffingParams& params, const MultisineConfig& train_config,
                         std::pair<double, double> val_amplitude_growth) {
    BenchmarkConfig config = default_benchmark();
    config.params = params;
    config.train = train_config;
    config.val_a_start = val_amplitude_growth.first;
    config.val_a_end = val_amplitude_growth.second;
    return make_benchmark(config);
}

} // namespace pnlss
