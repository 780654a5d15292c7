#pragma once

#include "pnlss/dataset.hpp"
#include "pnlss/frf.hpp"
#include "pnlss/levenberg_marquardt.hpp"
#include "pnlss/model.hpp"

#include <optional>

namespace pnlss {

/// Frequency-domain weighting W(k) on lines 0..floor(N/2) of each retained
/// period; lines k and N - k share a weight.
struct FrequencyWeighting {
    std::size_t N = 0;
    std::vector<CMatrix> weight; ///< p x p Hermitian PSD, one per line 0..floor(N/2)

    void validate(std::size_t outputs) const;
};

/// Inverse of an output noise covariance, eigenvalues floored at 1e-14 * trace.
FrequencyWeighting inverse_noise_weighting(const OutputNoiseCovariance& cov);

struct LmConfig {
    std::size_t max_iterations = 100;
    double lambda0 = 1.0;
    std::optional<FrequencyWeighting> weighting; ///< empty: uniform time-domain weighting
    double rel_tol = 1e-14;
};

struct OptimizationTrace {
    std::vector<PnlssModel> models; ///< models[0] is the starting model
    std::vector<double> costs;
    std::vector<double> lambdas;
    std::vector<LmStep> steps;
    std::string stop_reason;
    std::vector<std::string> warnings;

    const PnlssModel& last() const { return models.back(); }
};

/// Uniform: masked sum of squared errors. Frequency: per-segment sum over
/// lines of e(k)^H W(k) e(k) on the full two-sided spectrum of the retained
/// period. Returns +infinity when the simulation diverges.
double weighted_cost(const PnlssModel& model, const ConcatenatedRecord& data,
                     const std::optional<FrequencyWeighting>& weighting);

OptimizationTrace optimize(const PnlssModel& model0, const ConcatenatedRecord& data, const LmConfig& config);

struct ModelSelection {
    PnlssModel model;
    std::size_t index = 0;
    double rel_rmse = 0.0;
    std::vector<double> scores; ///< pooled rel-RMSE per trace entry (+inf if divergent)
};

/// Pooled validation rel-RMSE of every trace model over the validation mask.
std::vector<double> validation_scores(const OptimizationTrace& trace, const ConcatenatedRecord& validation);

/// Argmin of the validation scores, ties resolved toward the later model.
ModelSelection select_best(const OptimizationTrace& trace, const ConcatenatedRecord& validation);

} // namespace pnlss
