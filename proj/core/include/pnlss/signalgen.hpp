#pragma once

#include "pnlss/types.hpp"

#include <cstdint>
#include <span>
#include <string_view>

namespace pnlss {

enum class GridKind { Full, Odd, RandomOdd };

struct ExcitationGrid {
    GridKind kind = GridKind::Odd;
    /// Odd excited lines per detection group (RandomOdd only).
    int group_size = 4;

    static ExcitationGrid full() { return {GridKind::Full, 0}; }
    static ExcitationGrid odd() { return {GridKind::Odd, 0}; }
    static ExcitationGrid random_odd(int group_size) { return {GridKind::RandomOdd, group_size}; }
};

std::string_view to_string(GridKind kind);
GridKind parse_grid_kind(std::string_view name);

struct MultisineConfig {
    std::size_t N = 1024;
    double fs = 1.0;
    ExcitationGrid grid{};
    double f_max_ratio = 0.9;
    std::size_t R = 1;
    std::size_t P = 1;
    double rms = 1.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError on an invalid combination.
    void validate() const;
    /// Highest admissible line: floor(f_max_ratio * N / 2), never DC or Nyquist.
    int max_line() const;
};

/// One realization of a random-phase multisine, P periods long.
struct ExcitationSignal {
    Vector samples;
    LineSet excited_lines;
    std::vector<double> phases; ///< radians in [0, 2pi), one per excited line
    double amplitude = 0.0;     ///< flat per-line amplitude A_k after RMS scaling
    std::size_t N = 0;
    std::size_t P = 0;

    Eigen::Ref<const Vector> period() const { return samples.head(static_cast<Eigen::Index>(N)); }
};

/// Name of the pseudo-random generator, recorded in output metadata.
inline constexpr std::string_view kPrngName = "mt19937_64 (splitmix64 sub-seeding)";

LineSet excited_line_set(const MultisineConfig& config);

std::vector<ExcitationSignal> generate_multisine(const MultisineConfig& config);

/// One period of sum_k A_k sin(2 pi k t / N + phi_k) via inverse DFT.
Vector synthesize_period(std::size_t N, std::span<const int> lines,
                         std::span<const double> amplitudes, std::span<const double> phases);

} // namespace pnlss
