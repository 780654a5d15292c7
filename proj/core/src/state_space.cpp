#include "pnlss/state_space.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/spectral.hpp"

#include <Eigen/Eigenvalues>

namespace pnlss {

LinearStateSpace::LinearStateSpace(Matrix a, Matrix b, Matrix c, Matrix d, double sample_rate)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)), fs(sample_rate) {
    validate();
}

double LinearStateSpace::spectral_radius() const {
    if (A.size() == 0) return 0.0;
    return A.eigenvalues().cwiseAbs().maxCoeff();
}

void LinearStateSpace::validate() const {
    const auto n = A.rows();
    if (n < 1 || A.cols() != n) throw ConfigError("state space: A must be square with n >= 1");
    if (B.rows() != n || B.cols() < 1) throw ConfigError("state space: B must be n x m");
    if (C.cols() != n || C.rows() < 1) throw ConfigError("state space: C must be p x n");
    if (D.rows() != C.rows() || D.cols() != B.cols()) throw ConfigError("state space: D must be p x m");
    if (!(fs > 0.0)) throw ConfigError("state space: fs must be positive");
}

CMatrix transfer_at(const LinearStateSpace& model, Complex z) {
    const auto n = model.A.rows();
    const CMatrix M = z * CMatrix::Identity(n, n) - model.A.cast<Complex>();
    Eigen::PartialPivLU<CMatrix> lu(M);
    if (!(lu.rcond() > 1e-14)) throw NumericalError("transfer_at: z I - A is singular at the evaluation point");
    return model.D.cast<Complex>() + model.C.cast<Complex>() * lu.solve(model.B.cast<Complex>());
}

std::vector<CMatrix> frf_of_model(const LinearStateSpace& model, std::span<const int> lines, std::size_t N) {
    model.validate();
    std::vector<CMatrix> out;
    out.reserve(lines.size());
    for (int k : lines) out.push_back(transfer_at(model, spectral::unit_circle_point(k, N)));
    return out;
}

Matrix simulate_linear(const LinearStateSpace& model, const Eigen::Ref<const Matrix>& u, const Vector& x0) {
    model.validate();
    if (u.cols() != static_cast<Eigen::Index>(model.inputs())) throw ConfigError("simulate_linear: input width != m");
    Vector x = x0.size() == 0 ? Vector::Zero(model.A.rows()) : x0;
    Matrix y(u.rows(), model.C.rows());
    for (Eigen::Index t = 0; t < u.rows(); ++t) {
        const Vector ut = u.row(t).transpose();
        y.row(t) = (model.C * x + model.D * ut).transpose();
        x = model.A * x + model.B * ut;
    }
    return y;
}

LinearStateSpace similarity_transform(const LinearStateSpace& model, const Matrix& T) {
    const Matrix Ti = T.inverse();
    LinearStateSpace out(T * model.A * Ti, T * model.B, model.C * Ti, model.D, model.fs);
    out.warnings = model.warnings;
    return out;
}

} // namespace pnlss
