#pragma once

#include "pnlss/types.hpp"

#include <span>
#include <string>

namespace pnlss {

/// Discrete-time linear model x(k+1) = A x + B u, y = C x + D u.
struct LinearStateSpace {
    Matrix A, B, C, D;
    double fs = 1.0;
    std::vector<std::string> warnings;

    LinearStateSpace() = default;
    LinearStateSpace(Matrix a, Matrix b, Matrix c, Matrix d, double sample_rate = 1.0);

    std::size_t order() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t inputs() const { return static_cast<std::size_t>(B.cols()); }
    std::size_t outputs() const { return static_cast<std::size_t>(C.rows()); }

    double spectral_radius() const;
    bool stable() const { return spectral_radius() < 1.0; }

    /// Throws ConfigError on inconsistent dimensions.
    void validate() const;
};

/// D + C (z I - A)^{-1} B. Throws NumericalError if z I - A is singular.
CMatrix transfer_at(const LinearStateSpace& model, Complex z);

/// Transfer function evaluated at z_k = exp(j 2 pi line_k / N).
std::vector<CMatrix> frf_of_model(const LinearStateSpace& model, std::span<const int> lines, std::size_t N);

/// Linear filter response; u is T x m, result T x p.
Matrix simulate_linear(const LinearStateSpace& model, const Eigen::Ref<const Matrix>& u,
                       const Vector& x0 = Vector());

/// Same model in the coordinates x' = T x.
LinearStateSpace similarity_transform(const LinearStateSpace& model, const Matrix& T);

} // namespace pnlss
