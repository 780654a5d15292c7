#pragma once

#include "pnlss/types.hpp"

#include <functional>
#include <string>

namespace pnlss {

/// Damping schedule: halve on an accepted step, multiply by sqrt(10) on a rejected one.
double lambda_update(double lambda, bool success);

struct LmSettings {
    std::size_t max_iterations = 100;
    double lambda0 = 1.0;
    /// Stop once an accepted step improves the cost by less than this fraction.
    double rel_tol = 1e-14;
};

struct LmStep {
    bool success = false;
    double lambda_before = 0.0;
    double lambda_after = 0.0;
    double trial_cost = 0.0;
};

/// Accepted iterates in order; entry 0 is the starting point (lambda = lambda0).
struct LmResult {
    std::vector<Vector> parameters;
    std::vector<double> costs;
    std::vector<double> lambdas; ///< damping in force after each accepted entry
    std::vector<LmStep> steps;   ///< one per iteration, accepted or not
    std::string stop_reason;

    const Vector& best() const { return parameters.back(); }
    double best_cost() const { return costs.back(); }
};

/// Fills the residual for a parameter vector; returns false if it cannot be
/// evaluated (divergent simulation, singular evaluation).
using ResidualFn = std::function<bool(const Vector& theta, Vector& residual)>;
/// Jacobian of the residual at a point where ResidualFn last succeeded.
using JacobianFn = std::function<Matrix(const Vector& theta)>;

/// Marquardt-scaled Levenberg-Marquardt on cost = ||residual||^2.
///
/// Each iteration solves (J'J + lambda diag(J'J)) delta = -J' e through an SVD
/// of the column-normalized Jacobian, so rejected steps reuse the
/// decomposition of the current point.
LmResult levenberg_marquardt(const ResidualFn& residual, const JacobianFn& jacobian, Vector theta0,
                             const LmSettings& settings);

} // namespace pnlss
