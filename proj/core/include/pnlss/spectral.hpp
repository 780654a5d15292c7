#pragma once

#include "pnlss/types.hpp"

#include <cstdint>

// DFT convention used throughout the library: the forward transform is the
// unnormalized sum X[k] = sum_t x[t] exp(-j 2 pi k t / N); the inverse
// carries the 1/N factor.
namespace pnlss::spectral {

/// Forward DFT of a real sequence (full two-sided spectrum, length N).
CVector dft(const Eigen::Ref<const Vector>& x);

/// Column-wise forward DFT of a real N x c matrix.
CMatrix dft_columns(const Eigen::Ref<const Matrix>& x);

/// Real part of the inverse DFT (1/N scaling) of a full spectrum.
Vector idft_real(const CVector& spectrum);

/// Unit-circle evaluation point exp(j 2 pi line / N).
Complex unit_circle_point(int line, std::size_t N);

/// SplitMix64 mixer; derives independent sub-seeds from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
inline double unit_uniform(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

} // namespace pnlss::spectral
