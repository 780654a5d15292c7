#pragma once

#include "pnlss/dataset.hpp"
#include "pnlss/types.hpp"

namespace pnlss {

/// Best Linear Approximation on the excited lines with its distortion covariances.
///
/// Covariances act on vec(G) (column-major, length p*m). With R realizations
/// and P periods, cov_noise estimates the noise contribution to the variance
/// of G and cov_total the combined noise plus stochastic nonlinear
/// contribution.
struct FrfEstimate {
    LineSet lines;
    std::size_t N = 0;
    double fs = 1.0;
    std::size_t outputs = 0;
    std::size_t inputs = 0;
    std::vector<CMatrix> G;          ///< p x m per line
    std::vector<CMatrix> cov_total;  ///< covGML, (pm) x (pm) per line
    std::vector<CMatrix> cov_noise;  ///< covGn, (pm) x (pm) per line
    std::size_t R = 0;
    std::size_t P = 0;
    LineSet excluded_lines; ///< excited lines dropped for negligible input power

    std::size_t line_count() const { return lines.size(); }
    double frequency(std::size_t i) const { return fs * lines[i] / static_cast<double>(N); }
    void validate() const;
};

/// Robust-method BLA estimate (single input).
FrfEstimate estimate_bla(const DataRecord& rec);

/// Covariance of the period-averaged output spectrum, lines 0..floor(N/2).
struct OutputNoiseCovariance {
    LineSet lines;
    std::size_t N = 0;
    std::vector<CMatrix> cov; ///< p x p per line
};

OutputNoiseCovariance output_noise_covariance(const DataRecord& rec);

enum class LineClass { ExcitedOdd, UnexcitedOdd, UnexcitedEven };

std::string_view to_string(LineClass c);

/// Output level per line across the excited band, labelled by line class.
struct DistortionSpectrum {
    LineSet lines;
    std::vector<LineClass> classes;
    std::vector<double> level;

    /// Mean level over the lines of one class; 0 when the class is empty.
    double mean_level(LineClass c) const;
    std::size_t count(LineClass c) const;
};

DistortionSpectrum classify_distortions(const DataRecord& rec);

} // namespace pnlss
