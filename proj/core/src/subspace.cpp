#include "pnlss/subspace.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/log.hpp"
#include "pnlss/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <future>
#include <string>

namespace pnlss {

std::string_view to_string(FrfWeighting w) {
    return w == FrfWeighting::TotalDistortion ? "total" : "uniform";
}

FrfWeighting parse_frf_weighting(std::string_view name) {
    if (name == "total" || name == "total-distortion") return FrfWeighting::TotalDistortion;
    if (name == "uniform") return FrfWeighting::Uniform;
    throw ConfigError("unknown FRF weighting '" + std::string(name) + "'");
}

std::size_t SubspaceConfig::effective_block_rows() const {
    if (block_rows != 0) return block_rows;
    return orders.empty() ? 0 : *std::max_element(orders.begin(), orders.end()) + 2;
}

void SubspaceConfig::validate() const {
    if (orders.empty()) throw ConfigError("subspace: no candidate orders");
    for (auto n : orders)
        if (n < 1) throw ConfigError("subspace: orders must be >= 1");
    if (effective_block_rows() <= *std::max_element(orders.begin(), orders.end()))
        throw ConfigError("subspace: block rows must exceed the largest order");
}

namespace {

CMatrix inverse_sqrt(const CMatrix& cov, double floor) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(cov);
    const Vector values = eig.eigenvalues().cwiseMax(floor);
    return eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
}

// Scalar per-line weight for the subspace step (exact for SISO).
std::vector<double> scalar_weights(const FrfEstimate& frf, FrfWeighting weighting) {
    std::vector<double> w(frf.line_count(), 1.0);
    if (weighting == FrfWeighting::Uniform) return w;
    const auto W = frf_weights(frf, weighting);
    for (std::size_t i = 0; i < W.size(); ++i)
        w[i] = std::sqrt((W[i].adjoint() * W[i]).trace().real() / static_cast<double>(W[i].rows()));
    return w;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

// Column-orthonormal basis of the projected data matrix, plus its singular values.
struct ProjectedData {
    Matrix U;
    Vector sigma;
};

ProjectedData projected_data(const FrfEstimate& frf, std::size_t r, const std::vector<double>& w) {
    const auto F = static_cast<Eigen::Index>(frf.line_count());
    const auto p = static_cast<Eigen::Index>(frf.outputs);
    const auto m = static_cast<Eigen::Index>(frf.inputs);
    const auto rr = static_cast<Eigen::Index>(r);
    if (2 * F * m < rr * (m + p))
        throw ConfigError("subspace: too few frequency lines for " + std::to_string(r) + " block rows");

    // Rows of M: real and imaginary parts of each line's columns; columns: [W-part | G-part].
    Matrix M(2 * F * m, rr * (m + p));
    for (Eigen::Index k = 0; k < F; ++k) {
        const Complex z = spectral::unit_circle_point(frf.lines[static_cast<std::size_t>(k)], frf.N);
        const double wk = w[static_cast<std::size_t>(k)];
        const CMatrix& G = frf.G[static_cast<std::size_t>(k)];
        Complex zi = wk;
        for (Eigen::Index i = 0; i < rr; ++i) {
            const CMatrix Wblock = zi * CMatrix::Identity(m, m);
            const CMatrix Gblock = zi * G;
            for (Eigen::Index j = 0; j < m; ++j) {
                const Eigen::Index re_row = k * m + j;
                const Eigen::Index im_row = F * m + k * m + j;
                M.block(re_row, i * m, 1, m) = Wblock.col(j).real().transpose();
                M.block(im_row, i * m, 1, m) = Wblock.col(j).imag().transpose();
                M.block(re_row, rr * m + i * p, 1, p) = Gblock.col(j).real().transpose();
                M.block(im_row, rr * m + i * p, 1, p) = Gblock.col(j).imag().transpose();
            }
            zi *= z;
        }
    }
    Eigen::HouseholderQR<Matrix> qr(M);
    const Matrix R = qr.matrixQR().topRows(rr * (m + p)).triangularView<Eigen::Upper>();
    const Matrix R22t = R.bottomRightCorner(rr * p, rr * p).transpose();
    Eigen::JacobiSVD<Matrix> svd(R22t, Eigen::ComputeFullU);
    return {svd.matrixU(), svd.singularValues()};
}

} // namespace

std::vector<CMatrix> frf_weights(const FrfEstimate& frf, FrfWeighting weighting) {
    const auto d = static_cast<Eigen::Index>(frf.outputs * frf.inputs);
    std::vector<CMatrix> W(frf.line_count(), CMatrix::Identity(d, d));
    if (weighting == FrfWeighting::Uniform) return W;
    if (frf.cov_total.size() != frf.line_count())
        throw ConfigError("frf weighting: estimate carries no total-distortion covariance");

    double mean_trace = 0.0;
    for (const auto& c : frf.cov_total) mean_trace += c.trace().real();
    mean_trace /= static_cast<double>(frf.line_count());
    if (!(mean_trace > 0.0)) {
        log::warn("frf weighting: total-distortion covariance is zero everywhere; using uniform weights");
        return W;
    }
    for (std::size_t i = 0; i < W.size(); ++i) {
        const double trace = frf.cov_total[i].trace().real();
        const double floor = 1e-14 * (trace > 0.0 ? trace : mean_trace);
        W[i] = inverse_sqrt(frf.cov_total[i], floor);
    }
    return W;
}

double frf_fit_cost(const LinearStateSpace& model, const FrfEstimate& frf, FrfWeighting weighting) {
    const auto W = frf_weights(frf, weighting);
    const auto Gm = frf_of_model(model, frf.lines, frf.N);
    double cost = 0.0;
    for (std::size_t k = 0; k < Gm.size(); ++k) cost += (W[k] * vec(Gm[k] - frf.G[k])).squaredNorm();
    return cost;
}

Vector subspace_singular_values(const FrfEstimate& frf, std::size_t block_rows, FrfWeighting weighting) {
    frf.validate();
    return projected_data(frf, block_rows, scalar_weights(frf, weighting)).sigma;
}

LinearStateSpace subspace_estimate(const FrfEstimate& frf, std::size_t n, std::size_t block_rows,
                                   FrfWeighting weighting) {
    frf.validate();
    const std::size_t r = block_rows;
    if (n < 1) throw ConfigError("subspace_estimate: order must be >= 1");
    if (r <= n) throw ConfigError("subspace_estimate: block rows must exceed the order");
    if (frf.line_count() < r + n) throw ConfigError("subspace_estimate: need at least r + n frequency lines");

    const auto p = static_cast<Eigen::Index>(frf.outputs);
    const auto m = static_cast<Eigen::Index>(frf.inputs);
    const auto nn = static_cast<Eigen::Index>(n);
    const auto rr = static_cast<Eigen::Index>(r);
    const auto w = scalar_weights(frf, weighting);
    const auto data = projected_data(frf, r, w);

    std::vector<std::string> warnings;
    if (nn < data.sigma.size()) {
        const double sn = data.sigma(nn - 1), sn1 = data.sigma(nn);
        if (sn - sn1 <= 1e-12 * sn)
            warnings.push_back("ambiguous order: singular values " + std::to_string(n) + " and " +
                               std::to_string(n + 1) + " coincide");
    }

    // Observability estimate, then shift invariance for A and the first block row for C.
    const Matrix O = data.U.leftCols(nn);
    const Matrix C = O.topRows(p);
    const Matrix A = O.topRows((rr - 1) * p).completeOrthogonalDecomposition().solve(O.bottomRows((rr - 1) * p));

    // B, D from the weighted linear least-squares FRF fit.
    const auto F = static_cast<Eigen::Index>(frf.line_count());
    const Eigen::Index unknowns = nn * m + p * m;
    Matrix lhs(2 * F * p * m, unknowns);
    Vector rhs(2 * F * p * m);
    for (Eigen::Index k = 0; k < F; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const Complex z = spectral::unit_circle_point(frf.lines[ks], frf.N);
        const CMatrix zA = z * CMatrix::Identity(nn, nn) - A.cast<Complex>();
        Eigen::PartialPivLU<CMatrix> lu(zA);
        if (!(lu.rcond() > 1e-14)) throw NumericalError("subspace_estimate: estimated A has a pole on an FRF line");
        const CMatrix CX = C.cast<Complex>() * lu.inverse();
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) {
                const Eigen::Index row = ((k * m + j) * p + i) * 2;
                CVector coeff = CVector::Zero(unknowns);
                for (Eigen::Index l = 0; l < nn; ++l) coeff(j * nn + l) = CX(i, l);
                coeff(nn * m + j * p + i) = 1.0;
                const Complex target = frf.G[ks](i, j);
                lhs.row(row) = w[ks] * coeff.real().transpose();
                lhs.row(row + 1) = w[ks] * coeff.imag().transpose();
                rhs(row) = w[ks] * target.real();
                rhs(row + 1) = w[ks] * target.imag();
            }
        }
    }
    const Vector sol = lhs.completeOrthogonalDecomposition().solve(rhs);
    Matrix B(nn, m), D(p, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        B.col(j) = sol.segment(j * nn, nn);
        D.col(j) = sol.segment(nn * m + j * p, p);
    }

    LinearStateSpace model(A, B, C, D, frf.fs);
    model.warnings = std::move(warnings);
    for (const auto& msg : model.warnings) log::warn("subspace_estimate: " + msg);
    return model;
}

namespace {

Vector pack(const LinearStateSpace& s) {
    Vector theta(s.A.size() + s.B.size() + s.C.size() + s.D.size());
    Eigen::Index pos = 0;
    for (const Matrix* M : {&s.A, &s.B, &s.C, &s.D}) {
        for (Eigen::Index i = 0; i < M->rows(); ++i)
            for (Eigen::Index j = 0; j < M->cols(); ++j) theta(pos++) = (*M)(i, j);
    }
    return theta;
}

void unpack(const Vector& theta, LinearStateSpace& s) {
    Eigen::Index pos = 0;
    for (Matrix* M : {&s.A, &s.B, &s.C, &s.D}) {
        for (Eigen::Index i = 0; i < M->rows(); ++i)
            for (Eigen::Index j = 0; j < M->cols(); ++j) (*M)(i, j) = theta(pos++);
    }
}

void put_realified(Matrix& J, Eigen::Index row, Eigen::Index col, const CVector& v) {
    J.block(row, col, v.size(), 1) = v.real();
    J.block(row + v.size(), col, v.size(), 1) = v.imag();
}

} // namespace

LinearRefinement lm_refine_linear(const LinearStateSpace& model, const FrfEstimate& frf, std::size_t iterations,
                                  FrfWeighting weighting, double rel_tol, double lambda0) {
    model.validate();
    frf.validate();
    if (model.outputs() != frf.outputs || model.inputs() != frf.inputs)
        throw ConfigError("lm_refine_linear: model and FRF dimensions differ");

    const auto W = frf_weights(frf, weighting);
    const auto n = static_cast<Eigen::Index>(model.order());
    const auto p = static_cast<Eigen::Index>(model.outputs());
    const auto m = static_cast<Eigen::Index>(model.inputs());
    const Eigen::Index d = p * m;
    const auto F = static_cast<Eigen::Index>(frf.line_count());
    std::vector<Complex> z(frf.line_count());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = spectral::unit_circle_point(frf.lines[k], frf.N);

    LinearStateSpace work = model;
    auto residual = [&](const Vector& theta, Vector& r) {
        unpack(theta, work);
        r.resize(2 * F * d);
        for (Eigen::Index k = 0; k < F; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            CMatrix Gm;
            try {
                Gm = transfer_at(work, z[ks]);
            } catch (const NumericalError&) {
                return false;
            }
            const CVector e = W[ks] * vec(Gm - frf.G[ks]);
            r.segment(2 * k * d, d) = e.real();
            r.segment(2 * k * d + d, d) = e.imag();
        }
        return r.allFinite();
    };
    auto jacobian = [&](const Vector& theta) {
        unpack(theta, work);
        const Eigen::Index np = theta.size();
        Matrix J(2 * F * d, np);
        for (Eigen::Index k = 0; k < F; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const CMatrix X = (z[ks] * CMatrix::Identity(n, n) - work.A.cast<Complex>()).inverse();
            const CMatrix CX = work.C.cast<Complex>() * X;
            const CMatrix XB = X * work.B.cast<Complex>();
            Eigen::Index col = 0;
            CMatrix dG(p, m);
            auto emit = [&](const CMatrix& g) { put_realified(J, 2 * k * d, col++, W[ks] * vec(g)); };
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < n; ++b) emit(CX.col(a) * XB.row(b));
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < m; ++b) {
                    dG.setZero();
                    dG.col(b) = CX.col(a);
                    emit(dG);
                }
            for (Eigen::Index a = 0; a < p; ++a)
                for (Eigen::Index b = 0; b < n; ++b) {
                    dG.setZero();
                    dG.row(a) = XB.row(b);
                    emit(dG);
                }
            for (Eigen::Index a = 0; a < p; ++a)
                for (Eigen::Index b = 0; b < m; ++b) {
                    dG.setZero();
                    dG(a, b) = 1.0;
                    emit(dG);
                }
        }
        return J;
    };

    Vector r0;
    if (!residual(pack(model), r0)) throw NumericalError("lm_refine_linear: initial cost is not finite");

    LmSettings settings;
    settings.max_iterations = iterations;
    settings.lambda0 = lambda0;
    settings.rel_tol = rel_tol;
    LinearRefinement out{model, levenberg_marquardt(residual, jacobian, pack(model), settings), 0};
    out.iterations_run = out.lm.steps.size();
    unpack(out.lm.best(), out.model);
    return out;
}

std::map<std::size_t, OrderResult> loop_orders(const FrfEstimate& frf, const SubspaceConfig& config,
                                               std::size_t threads) {
    config.validate();
    frf.validate();
    const std::size_t r = config.effective_block_rows();

    auto run_order = [&](std::size_t n) {
        OrderResult res;
        try {
            res.singular_values = subspace_singular_values(frf, r, config.weighting);
            const auto initial = subspace_estimate(frf, n, r, config.weighting);
            if (config.lm_iterations == 0) {
                res.model = initial;
                res.fit_cost = frf_fit_cost(initial, frf, config.weighting);
            } else {
                auto refined = lm_refine_linear(initial, frf, config.lm_iterations, config.weighting, 1e-12,
                                                config.lambda0);
                res.fit_cost = refined.cost();
                res.model = std::move(refined.model);
            }
        } catch (const std::exception& e) {
            res.error = e.what();
            log::warn("order " + std::to_string(n) + " failed: " + res.error);
        }
        return res;
    };

    std::map<std::size_t, OrderResult> out;
    if (threads <= 1) {
        for (auto n : config.orders) out[n] = run_order(n);
        return out;
    }
    std::vector<std::pair<std::size_t, std::future<OrderResult>>> pending;
    for (auto n : config.orders) {
        pending.emplace_back(n, std::async(std::launch::async, run_order, n));
        if (pending.size() >= threads) {
            out[pending.front().first] = pending.front().second.get();
            pending.erase(pending.begin());
        }
    }
    for (auto& [n, fut] : pending) out[n] = fut.get();
    return out;
}

} // namespace pnlss
