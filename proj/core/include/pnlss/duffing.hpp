#pragma once

#include "pnlss/dataset.hpp"
#include "pnlss/signalgen.hpp"

#include <cstdint>

namespace pnlss {

/// m y'' + c y' + (alpha + beta y^2) y = u
struct DuffingParams {
    double mass = 1.0;
    double damping = 31.4159;
    double alpha = 98696.044;
    double beta = 0.0;
    double fs = 1000.0;
    double noise_std = 0.0; ///< additive white Gaussian output noise
    std::uint64_t seed = 0;

    void validate() const;
};

/// How the sampled input is reconstructed between samples.
enum class InputHold {
    ZeroOrder,  ///< piecewise constant
    Bandlimited ///< trigonometric interpolation; the sequence is treated as one period
};

/// Fixed-step RK4 with `substeps` steps per sample, starting at rest. y(k) is
/// the displacement at t = k / fs. Noise (when noise_std > 0) is drawn from
/// `seed` and added after integration. Throws NumericalError on divergence.
Vector simulate_duffing(const DuffingParams& params, const Eigen::Ref<const Vector>& u, int substeps = 20,
                        InputHold hold = InputHold::ZeroOrder);

/// Seeded white Gaussian samples (Box-Muller over mt19937_64).
Vector gaussian_noise(std::size_t count, double stddev, std::uint64_t seed);

struct BenchmarkConfig {
    DuffingParams params;
    MultisineConfig train;          ///< P counts retained (steady-state) periods
    std::size_t settle_periods = 3; ///< simulated and discarded before the retained ones
    double val_a_start = 0.0;       ///< validation envelope at the first sample
    double val_a_end = 0.0;         ///< validation envelope at the last sample
    std::size_t val_length = 0;
    std::size_t val_t2 = 0;
    int substeps = 20;

    void validate() const;
};

/// Desk-scale default preset (resonance at 50 Hz, excited band up to 100 Hz).
BenchmarkConfig default_benchmark();

struct Benchmark {
    DataRecord train;                  ///< R x P x N, noise included
    ConcatenatedRecord validation;     ///< one non-periodic segment with t2 discard
    double max_period_deviation = 0.0; ///< noiseless, relative to rms(y)
};

Benchmark make_benchmark(const BenchmarkConfig& config);

Benchmark make_benchmark(const DuffingParams& params, const MultisineConfig& train_config,
                         std::pair<double, double> val_amplitude_growth);

} // namespace pnlss
