#include "pnlss/levenberg_marquardt.hpp"

#include "pnlss/errors.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <memory>

namespace pnlss {

double lambda_update(double lambda, bool success) {
    static const double kSqrt10 = std::sqrt(10.0);
    return success ? 0.5 * lambda : lambda * kSqrt10;
}

namespace {

// SVD of J * diag(1/scale), kept for every damping value tried at one point.
class DampedSolver {
public:
    DampedSolver(const Matrix& J, const Vector& residual) {
        if (!J.allFinite()) throw NumericalError("levenberg_marquardt: non-finite Jacobian");
        scale_ = J.colwise().norm().transpose();
        for (Eigen::Index i = 0; i < scale_.size(); ++i)
            if (!(scale_(i) > 0.0)) scale_(i) = 1.0;
        const Matrix Js = J * scale_.cwiseInverse().asDiagonal();
        Eigen::JacobiSVD<Matrix> svd(Js, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sigma_ = svd.singularValues();
        V_ = svd.matrixV();
        projected_ = svd.matrixU().transpose() * residual;
    }

    Vector step(double lambda) const {
        const Vector gain = sigma_.array() / (sigma_.array().square() + lambda);
        const Vector scaled = -(V_ * (gain.array() * projected_.array()).matrix());
        return scaled.cwiseQuotient(scale_);
    }

private:
    Vector scale_, sigma_, projected_;
    Matrix V_;
};

} // namespace

LmResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian, Vector theta0,
                             const LmSettings& settings) {
    if (!(settings.lambda0 > 0.0)) throw ConfigError("levenberg_marquardt: lambda0 must be positive");
    if (settings.max_iterations < 1) throw ConfigError("levenberg_marquardt: max_iterations must be >= 1");

    Vector r;
    if (!residual(theta0, r)) throw NumericalError("levenberg_marquardt: initial point cannot be evaluated");
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) throw NumericalError("levenberg_marquardt: initial cost is not finite");

    LmResult out;
    Vector theta = std::move(theta0);
    double lambda = settings.lambda0;
    out.parameters.push_back(theta);
    out.costs.push_back(cost);
    out.lambdas.push_back(lambda);
    out.stop_reason = "max_iterations";

    auto solver = std::make_unique<DampedSolver>(jacobian(theta), r);
    Vector trial_r;
    for (std::size_t it = 0; it < settings.max_iterations; ++it) {
        if (cost == 0.0) {
            out.stop_reason = "zero_cost";
            break;
        }
        const Vector delta = solver->step(lambda);
        Vector trial = theta + delta;
        double trial_cost = std::numeric_limits<double>::infinity();
        if (delta.allFinite() && residual(trial, trial_r)) {
            trial_cost = trial_r.squaredNorm();
            if (!std::isfinite(trial_cost)) trial_cost = std::numeric_limits<double>::infinity();
        }
        const bool success = trial_cost < cost;
        const double next_lambda = lambda_update(lambda, success);
        out.steps.push_back({success, lambda, next_lambda, trial_cost});
        lambda = next_lambda;
        if (!success) continue;

        const double improvement = (cost - trial_cost) / cost;
        theta = std::move(trial);
        cost = trial_cost;
        r.swap(trial_r);
        out.parameters.push_back(theta);
        out.costs.push_back(cost);
        out.lambdas.push_back(lambda);
        if (improvement < settings.rel_tol) {
            out.stop_reason = "relative_cost_change";
            break;
        }
        if (it + 1 < settings.max_iterations) solver = std::make_unique<DampedSolver>(jacobian(theta), r);
    }
    return out;
}

} // namespace pnlss
