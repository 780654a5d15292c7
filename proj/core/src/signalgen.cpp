#include "pnlss/signalgen.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace pnlss {

namespace {
constexpr std::uint64_t kDetectionStream = 0x5eedd37ec7ULL;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

std::string_view to_string(GridKind kind) {
    switch (kind) {
    case GridKind::Full: return "full";
    case GridKind::Odd: return "odd";
    case GridKind::RandomOdd: return "random-odd";
    }
    return "unknown";
}

GridKind parse_grid_kind(std::string_view name) {
    if (name == "full") return GridKind::Full;
    if (name == "odd") return GridKind::Odd;
    if (name == "random-odd" || name == "random_odd") return GridKind::RandomOdd;
    throw ConfigError("unknown excitation grid '" + std::string(name) + "'");
}

void MultisineConfig::validate() const {
    if (N < 3) throw ConfigError("multisine: N must be at least 3");
    if (!(fs > 0.0) || !std::isfinite(fs)) throw ConfigError("multisine: fs must be positive");
    if (!(f_max_ratio > 0.0 && f_max_ratio <= 1.0))
        throw ConfigError("multisine: f_max_ratio must lie in (0, 1]");
    if (R == 0) throw ConfigError("multisine: realization count must be positive");
    if (P == 0) throw ConfigError("multisine: period count must be positive");
    if (!(rms > 0.0) || !std::isfinite(rms)) throw ConfigError("multisine: rms must be positive");
    if (grid.kind == GridKind::RandomOdd && grid.group_size < 2)
        throw ConfigError("multisine: random-odd group size must be >= 2");
}

int MultisineConfig::max_line() const {
    const auto band = static_cast<long long>(std::floor(f_max_ratio * static_cast<double>(N) / 2.0));
    const auto below_nyquist = static_cast<long long>((N - 1) / 2);
    return static_cast<int>(std::min(band, below_nyquist));
}

LineSet excited_line_set(const MultisineConfig& config) {
    config.validate();
    const int K = config.max_line();
    LineSet lines;
    if (config.grid.kind == GridKind::Full) {
        for (int k = 1; k <= K; ++k) lines.push_back(k);
    } else {
        for (int k = 1; k <= K; k += 2) lines.push_back(k);
    }
    if (lines.empty())
        throw ConfigError("multisine: no excited lines (f_max_ratio too small for N=" +
                          std::to_string(config.N) + ")");

    if (config.grid.kind == GridKind::RandomOdd) {
        // One detection line per complete group; a trailing partial group is kept whole.
        std::mt19937_64 gen(spectral::mix_seed(config.seed, kDetectionStream));
        const auto g = static_cast<std::size_t>(config.grid.group_size);
        LineSet kept;
        std::size_t start = 0;
        for (; start + g <= lines.size(); start += g) {
            const auto drop = static_cast<std::size_t>(spectral::unit_uniform(gen()) * static_cast<double>(g));
            for (std::size_t i = 0; i < g; ++i)
                if (i != drop) kept.push_back(lines[start + i]);
        }
        for (; start < lines.size(); ++start) kept.push_back(lines[start]);
        lines = std::move(kept);
        if (lines.empty()) throw ConfigError("multisine: random-odd grid left no excited lines");
    }
    return lines;
}

Vector synthesize_period(std::size_t N, std::span<const int> lines,
                         std::span<const double> amplitudes, std::span<const double> phases) {
    if (lines.size() != amplitudes.size() || lines.size() != phases.size())
        throw ConfigError("synthesize_period: lines, amplitudes and phases differ in length");
    // x[t] = Im( sum_k A_k e^{j phi_k} e^{j 2 pi k t / N} ) = Im( N * idft(X) ).
    CVector spectrum = CVector::Zero(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int k = lines[i];
        if (k <= 0 || 2 * static_cast<std::size_t>(k) >= N)
            throw ConfigError("synthesize_period: line outside (0, N/2)");
        spectrum(k) += amplitudes[i] * std::polar(1.0, phases[i]);
    }
    // Im(z) = Re(-j z).
    spectrum *= Complex(0.0, -static_cast<double>(N));
    return spectral::idft_real(spectrum);
}

std::vector<ExcitationSignal> generate_multisine(const MultisineConfig& config) {
    const LineSet lines = excited_line_set(config);
    const std::vector<double> unit_amplitudes(lines.size(), 1.0);

    std::vector<ExcitationSignal> out;
    out.reserve(config.R);
    for (std::size_t r = 0; r < config.R; ++r) {
        std::mt19937_64 gen(spectral::mix_seed(config.seed, r));
        std::vector<double> phases(lines.size());
        for (auto& phi : phases) {
            phi = kTwoPi * spectral::unit_uniform(gen());
            if (phi >= kTwoPi) phi = 0.0;
        }

        Vector period = synthesize_period(config.N, lines, unit_amplitudes, phases);
        const double actual_rms = std::sqrt(period.squaredNorm() / static_cast<double>(config.N));
        const double scale = config.rms / actual_rms;
        period *= scale;

        ExcitationSignal sig;
        sig.samples = period.replicate(static_cast<Eigen::Index>(config.P), 1);
        sig.excited_lines = lines;
        sig.phases = std::move(phases);
        sig.amplitude = scale;
        sig.N = config.N;
        sig.P = config.P;
        out.push_back(std::move(sig));
    }
    return out;
}

} // namespace pnlss
