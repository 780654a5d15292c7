#include "pnlss/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <numbers>

namespace pnlss::spectral {

namespace {
Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}
} // namespace

CVector dft(const Eigen::Ref<const Vector>& x) {
    std::vector<double> in(x.data(), x.data() + x.size());
    if (x.innerStride() != 1) {
        for (Eigen::Index i = 0; i < x.size(); ++i) in[static_cast<std::size_t>(i)] = x(i);
    }
    std::vector<Complex> out;
    engine().fwd(out, in);
    return Eigen::Map<CVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

CMatrix dft_columns(const Eigen::Ref<const Matrix>& x) {
    CMatrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = dft(x.col(c));
    return out;
}

Vector idft_real(const CVector& spectrum) {
    std::vector<Complex> in(spectrum.data(), spectrum.data() + spectrum.size());
    std::vector<Complex> out;
    engine().inv(out, in);
    Vector result(static_cast<Eigen::Index>(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i) result(static_cast<Eigen::Index>(i)) = out[i].real();
    return result;
}

Complex unit_circle_point(int line, std::size_t N) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(line) / static_cast<double>(N);
    return {std::cos(angle), std::sin(angle)};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace pnlss::spectral
