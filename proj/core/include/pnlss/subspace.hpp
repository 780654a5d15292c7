#pragma once

#include "pnlss/frf.hpp"
#include "pnlss/levenberg_marquardt.hpp"
#include "pnlss/state_space.hpp"

#include <map>
#include <optional>
#include <string_view>

namespace pnlss {

enum class FrfWeighting { TotalDistortion, Uniform };

std::string_view to_string(FrfWeighting w);
FrfWeighting parse_frf_weighting(std::string_view name);

struct SubspaceConfig {
    std::vector<std::size_t> orders;
    std::size_t block_rows = 0; ///< 0 selects max(orders) + 2
    std::size_t lm_iterations = 100;
    FrfWeighting weighting = FrfWeighting::TotalDistortion;
    double lambda0 = 1.0;

    std::size_t effective_block_rows() const;
    void validate() const;
};

/// Per-line weights W(k) with W(k)^H W(k) = covGML(k)^{-1} (identity when Uniform).
std::vector<CMatrix> frf_weights(const FrfEstimate& frf, FrfWeighting weighting);

/// sum_k || W(k) vec(G_model(z_k) - G(k)) ||^2
double frf_fit_cost(const LinearStateSpace& model, const FrfEstimate& frf, FrfWeighting weighting);

/// Singular values of the projected, weighted frequency-domain data matrix.
Vector subspace_singular_values(const FrfEstimate& frf, std::size_t block_rows, FrfWeighting weighting);

/// Frequency-domain subspace estimate of order n with r block rows.
LinearStateSpace subspace_estimate(const FrfEstimate& frf, std::size_t n, std::size_t block_rows,
                                   FrfWeighting weighting);

struct LinearRefinement {
    LinearStateSpace model;
    LmResult lm;
    std::size_t iterations_run = 0;
    double cost() const { return lm.best_cost(); }
};

/// Weighted LM refinement of every entry of A, B, C, D against the FRF.
LinearRefinement lm_refine_linear(const LinearStateSpace& model, const FrfEstimate& frf,
                                  std::size_t iterations, FrfWeighting weighting,
                                  double rel_tol = 1e-12, double lambda0 = 1.0);

struct OrderResult {
    std::optional<LinearStateSpace> model;
    double fit_cost = 0.0;
    Vector singular_values;
    std::string error;

    bool ok() const { return model.has_value(); }
};

/// Subspace estimate plus LM refinement for every candidate order.
std::map<std::size_t, OrderResult> loop_orders(const FrfEstimate& frf, const SubspaceConfig& config,
                                               std::size_t threads = 1);

} // namespace pnlss
