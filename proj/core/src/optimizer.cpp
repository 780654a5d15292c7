#include "pnlss/optimizer.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/log.hpp"
#include "pnlss/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace pnlss {

void FrequencyWeighting::validate(std::size_t outputs) const {
    if (N == 0) throw ConfigError("frequency weighting: N missing");
    if (weight.size() != N / 2 + 1) throw ConfigError("frequency weighting: need one weight per line 0..N/2");
    for (const auto& w : weight)
        if (w.rows() != static_cast<Eigen::Index>(outputs) || w.cols() != static_cast<Eigen::Index>(outputs))
            throw ConfigError("frequency weighting: weight has wrong size");
}

FrequencyWeighting inverse_noise_weighting(const OutputNoiseCovariance& cov) {
    FrequencyWeighting out;
    out.N = cov.N;
    for (const auto& c : cov.cov) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(c);
        const double trace = c.trace().real();
        if (!(trace > 0.0)) throw NumericalError("inverse_noise_weighting: zero noise covariance on a line");
        const Vector values = eig.eigenvalues().cwiseMax(1e-14 * trace);
        out.weight.push_back(eig.eigenvectors() * values.cwiseInverse().asDiagonal() *
                             eig.eigenvectors().adjoint());
    }
    return out;
}

namespace {

// Residual assembly shared by the cost and the optimizer.
class ResidualMap {
public:
    ResidualMap(const ConcatenatedRecord& data, const std::optional<FrequencyWeighting>& weighting,
                std::size_t outputs)
        : data_(data), mask_(data.cost_mask()) {
        if (weighting) {
            bool full_periods = data.t2 == 0;
            for (auto len : data.segment_lengths) full_periods = full_periods && len == weighting->N;
            if (!full_periods) {
                warning_ = "frequency weighting needs full retained periods of length N; falling back to uniform";
                log::warn(warning_);
            } else {
                weighting->validate(outputs);
                // Factor W(k) = L L^H; residual on line k is sqrt(c_k) L^H E(k).
                for (std::size_t k = 0; k < weighting->weight.size(); ++k) {
                    Eigen::SelfAdjointEigenSolver<CMatrix> eig(weighting->weight[k]);
                    const bool edge = k == 0 || 2 * k == weighting->N;
                    const double c = edge ? 1.0 : 2.0;
                    factors_.push_back(std::sqrt(c) * (eig.eigenvectors() *
                                                       eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal())
                                                          .adjoint());
                }
                N_ = weighting->N;
            }
        }
        rows_ = frequency() ? data.segment_count() * factors_.size() * 2 * outputs : data.masked_count() * outputs;
    }

    bool frequency() const { return !factors_.empty(); }
    const std::string& warning() const { return warning_; }
    Eigen::Index rows() const { return static_cast<Eigen::Index>(rows_); }

    // Maps an error-like block (T*p rows, c columns; row t*p+i) to residual rows.
    Matrix apply(const Matrix& block, std::size_t p) const {
        const Eigen::Index cols = block.cols();
        Matrix out(rows(), cols);
        if (!frequency()) {
            Eigen::Index r = 0;
            for (std::size_t t = 0; t < mask_.size(); ++t) {
                if (!mask_[t]) continue;
                out.middleRows(r, static_cast<Eigen::Index>(p)) =
                    block.middleRows(static_cast<Eigen::Index>(t * p), static_cast<Eigen::Index>(p));
                r += static_cast<Eigen::Index>(p);
            }
            return out;
        }
        const auto P = static_cast<Eigen::Index>(p);
        const auto n = static_cast<Eigen::Index>(N_);
        const auto lines = static_cast<Eigen::Index>(factors_.size());
        Eigen::Index r = 0;
        Vector series(n);
        std::vector<CMatrix> spectra(static_cast<std::size_t>(P));
        for (std::size_t s = 0; s < data_.segment_count(); ++s) {
            const auto start = static_cast<Eigen::Index>(data_.original_start(s));
            for (Eigen::Index c = 0; c < cols; ++c) {
                for (Eigen::Index i = 0; i < P; ++i) {
                    for (Eigen::Index t = 0; t < n; ++t) series(t) = block((start + t) * P + i, c);
                    const CVector X = spectral::dft(series);
                    spectra[static_cast<std::size_t>(i)].resize(lines, 1);
                    spectra[static_cast<std::size_t>(i)] = X.head(lines);
                }
                for (Eigen::Index k = 0; k < lines; ++k) {
                    CVector e(P);
                    for (Eigen::Index i = 0; i < P; ++i) e(i) = spectra[static_cast<std::size_t>(i)](k, 0);
                    const CVector w = factors_[static_cast<std::size_t>(k)] * e;
                    out.block(r + 2 * k * P, c, P, 1) = w.real();
                    out.block(r + 2 * k * P + P, c, P, 1) = w.imag();
                }
            }
            r += 2 * lines * P;
        }
        return out;
    }

private:
    const ConcatenatedRecord& data_;
    std::vector<bool> mask_;
    std::vector<CMatrix> factors_;
    std::size_t N_ = 0;
    std::size_t rows_ = 0;
    std::string warning_;
};

Matrix flatten_rows(const Matrix& y) {
    // T x p -> (T*p) x 1 with row t*p + i.
    Matrix out(y.size(), 1);
    for (Eigen::Index t = 0; t < y.rows(); ++t)
        for (Eigen::Index i = 0; i < y.cols(); ++i) out(t * y.cols() + i, 0) = y(t, i);
    return out;
}

void check_data(const PnlssModel& model, const ConcatenatedRecord& data) {
    data.validate();
    if (data.u.cols() != static_cast<Eigen::Index>(model.inputs()) ||
        data.y.cols() != static_cast<Eigen::Index>(model.outputs()))
        throw ConfigError("optimizer: data dimensions do not match the model");
}

} // namespace

double weighted_cost(const PnlssModel& model, const ConcatenatedRecord& data,
                     const std::optional<FrequencyWeighting>& weighting) {
    check_data(model, data);
    const auto sim = simulate(model, data.u);
    if (sim.diverged) return std::numeric_limits<double>::infinity();
    const ResidualMap map(data, weighting, model.outputs());
    const double cost = map.apply(flatten_rows(sim.y - data.y), model.outputs()).squaredNorm();
    return std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity();
}

OptimizationTrace optimize(const PnlssModel& model0, const ConcatenatedRecord& data, const LmConfig& config) {
    model0.validate();
    check_data(model0, data);
    const ResidualMap map(data, config.weighting, model0.outputs());
    const std::size_t p = model0.outputs();

    PnlssModel work = model0;
    SimulationResult last_sim;
    Vector last_theta;
    auto residual = [&](const Vector& theta, Vector& r) {
        work.set_parameters(theta);
        auto sim = simulate(work, data.u);
        if (sim.diverged) return false;
        r = map.apply(flatten_rows(sim.y - data.y), p).col(0);
        if (!r.allFinite()) return false;
        last_sim = std::move(sim);
        last_theta = theta;
        return true;
    };
    auto jac = [&](const Vector& theta) {
        work.set_parameters(theta);
        if (last_theta.size() != theta.size() || last_theta != theta) {
            last_sim = simulate(work, data.u);
            last_theta = theta;
        }
        return map.apply(jacobian(work, data.u, last_sim), p);
    };

    LmSettings settings;
    settings.max_iterations = config.max_iterations;
    settings.lambda0 = config.lambda0;
    settings.rel_tol = config.rel_tol;
    const LmResult lm = levenberg_marquardt(residual, jac, model0.parameters(), settings);

    OptimizationTrace trace;
    for (const auto& theta : lm.parameters) {
        PnlssModel m = model0;
        m.set_parameters(theta);
        trace.models.push_back(std::move(m));
    }
    trace.costs = lm.costs;
    trace.lambdas = lm.lambdas;
    trace.steps = lm.steps;
    trace.stop_reason = lm.stop_reason;
    if (!map.warning().empty()) trace.warnings.push_back(map.warning());
    return trace;
}

std::vector<double> validation_scores(const OptimizationTrace& trace, const ConcatenatedRecord& validation) {
    const auto mask = validation.cost_mask();
    std::vector<double> scores;
    scores.reserve(trace.models.size());
    for (const auto& model : trace.models) {
        check_data(model, validation);
        const auto sim = simulate(model, validation.u);
        double score = std::numeric_limits<double>::infinity();
        if (!sim.diverged) {
            score = pooled(relative_rms_error(validation.y, sim.y, mask));
            if (!std::isfinite(score)) score = std::numeric_limits<double>::infinity();
        }
        scores.push_back(score);
    }
    return scores;
}

ModelSelection select_best(const OptimizationTrace& trace, const ConcatenatedRecord& validation) {
    if (trace.models.empty()) throw ConfigError("select_best: empty trace");
    const auto scores = validation_scores(trace, validation);
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) continue;
        if (best == scores.size() || scores[i] <= scores[best]) best = i;
    }
    if (best == scores.size()) throw NumericalError("select_best: every model diverges on the validation data");
    return {trace.models[best], best, scores[best], scores};
}

} // namespace pnlss
