#include "oracles.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/levenberg_marquardt.hpp"
#include "pnlss/optimizer.hpp"

#include <doctest.h>

using namespace pnlss;

namespace {

PnlssModel true_model() {
    Matrix A(2, 2), B(2, 1), C(1, 2), D(1, 1);
    A << 0.6, -0.35, 0.35, 0.6;
    B << 1.0, 0.3;
    C << 0.7, -0.4;
    D << 0.1;
    PnlssModel m = init_from_linear({A, B, C, D}, {2, 3}, {2, 3}, ActiveSelection::states_only(),
                                    ActiveSelection::none());
    m.set_E(0, 0, 0.05);
    m.set_E(1, 1, -0.04);
    m.set_E(0, 3, 0.02);
    return m;
}

PnlssModel linear_start(const PnlssModel& m) {
    PnlssModel start = m;
    start.set_E(Matrix::Zero(m.E().rows(), m.E().cols()));
    return start;
}

// Segments of a periodic input, outputs from `m` in steady state.
ConcatenatedRecord periodic_data(const PnlssModel& m, std::size_t N, std::size_t segments, std::uint64_t seed,
                                 double noise = 0.0, std::size_t t2 = 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<DataRecord> recs;
    for (std::size_t s = 0; s < segments; ++s) {
        Matrix period(static_cast<Eigen::Index>(N), 1);
        for (auto& v : period.reshaped()) v = 0.5 * nd(rng);
        Matrix u(static_cast<Eigen::Index>(3 * N), 1);
        for (int k = 0; k < 3; ++k) u.middleRows(k * static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)) = period;
        const Matrix y = simulate(m, u).y.bottomRows(static_cast<Eigen::Index>(N));
        DataRecord rec(1, 1, N, 1, 1, 1.0, true);
        rec.u(0, 0) = period;
        rec.y(0, 0) = y;
        for (auto& v : rec.y(0, 0).reshaped()) v += noise * nd(rng);
        recs.push_back(std::move(rec));
    }
    return concatenate(recs, N, t2);
}

double train_rrmse(const PnlssModel& m, const ConcatenatedRecord& d) {
    return pooled(relative_rms_error(d.y, simulate(m, d.u).y, d.cost_mask()));
}

} // namespace

TEST_SUITE("optimizer") {

TEST_CASE("lambda schedule") {
    CHECK(lambda_update(100.0, true) == 50.0);
    CHECK(lambda_update(1.0, false) == std::sqrt(10.0));
    CHECK(lambda_update(1.0, false) == doctest::Approx(3.16227766));
    CHECK(lambda_update(0.5, true) == 0.25);
}

TEST_CASE("generic LM solves a small nonlinear least-squares problem") {
    // Rosenbrock in residual form: r = [10 (y - x^2), 1 - x].
    auto res = [](const Vector& th, Vector& r) {
        r.resize(2);
        r << 10.0 * (th(1) - th(0) * th(0)), 1.0 - th(0);
        return true;
    };
    auto jac = [](const Vector& th) {
        Matrix J(2, 2);
        J << -20.0 * th(0), 10.0, -1.0, 0.0;
        return J;
    };
    LmSettings s;
    s.max_iterations = 200;
    const LmResult r = levenberg_marquardt(res, jac, Vector::Constant(2, -1.2), s);
    CHECK(r.best()(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.best()(1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.costs.front() > r.costs.back());
}

TEST_CASE("weighted cost: perfect model, Parseval and linear scaling") {
    const PnlssModel m = true_model();
    const std::size_t N = 128;
    const ConcatenatedRecord data = periodic_data(m, N, 2, 1);
    CHECK(weighted_cost(m, data, std::nullopt) <= 1e-18 * data.y.squaredNorm());

    const PnlssModel wrong = linear_start(m);
    const double uniform = weighted_cost(wrong, data, std::nullopt);
    FrequencyWeighting W;
    W.N = N;
    W.weight.assign(N / 2 + 1, CMatrix::Identity(1, 1) / static_cast<double>(N));
    const double freq = weighted_cost(wrong, data, W);
    CHECK(std::abs(freq - uniform) <= 1e-10 * uniform);

    FrequencyWeighting W3 = W;
    for (auto& w : W3.weight) w *= 3.0;
    CHECK(weighted_cost(wrong, data, W3) == doctest::Approx(3.0 * freq).epsilon(1e-14));
}

TEST_CASE("divergent simulation costs infinity") {
    PnlssModel m = true_model();
    m.set_E(0, 0, 50.0);
    const ConcatenatedRecord data = periodic_data(true_model(), 64, 1, 2);
    ConcatenatedRecord big = data;
    big.u *= 100.0;
    CHECK(std::isinf(weighted_cost(m, big, std::nullopt)));
    CHECK_THROWS_AS(optimize(m, big, LmConfig{}), NumericalError);
}

TEST_CASE("data generated by the start model: nothing to improve") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 128, 2, 3);
    const OptimizationTrace tr = optimize(m, data, LmConfig{});
    CHECK((tr.models.size() == 1 || tr.costs.front() < 1e-16));
    CHECK(tr.models.front().parameters() == m.parameters());
}

TEST_CASE("re-identification from the linear part") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 512, 2, 4);
    LmConfig cfg;
    cfg.max_iterations = 50;
    const OptimizationTrace tr = optimize(linear_start(m), data, cfg);
    CHECK(train_rrmse(tr.last(), data) < 1e-3);
    CHECK(train_rrmse(tr.models.front(), data) > 1e-2);
}

TEST_CASE("trace bookkeeping: monotone costs and reproducible lambdas") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 256, 2, 5, 1e-3);
    LmConfig cfg;
    cfg.max_iterations = 30;
    cfg.lambda0 = 1e3;
    const OptimizationTrace tr = optimize(linear_start(m), data, cfg);
    REQUIRE(tr.models.size() == tr.costs.size());
    REQUIRE(tr.costs.size() == tr.lambdas.size());
    for (std::size_t i = 1; i < tr.costs.size(); ++i) CHECK(tr.costs[i] < tr.costs[i - 1]);

    double lambda = cfg.lambda0;
    std::vector<double> rebuilt{lambda};
    for (const auto& step : tr.steps) {
        CHECK(step.lambda_before == lambda);
        lambda = lambda_update(lambda, step.success);
        CHECK(step.lambda_after == lambda);
        if (step.success) rebuilt.push_back(lambda);
    }
    CHECK(rebuilt == tr.lambdas);
}

TEST_CASE("optimization is deterministic") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 128, 2, 6, 1e-3);
    LmConfig cfg;
    cfg.max_iterations = 10;
    const OptimizationTrace a = optimize(linear_start(m), data, cfg);
    const OptimizationTrace b = optimize(linear_start(m), data, cfg);
    CHECK(a.costs == b.costs);
    CHECK(a.lambdas == b.lambdas);
    CHECK(a.last().parameters() == b.last().parameters());
}

TEST_CASE("masked samples do not influence the trace") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 128, 2, 7, 1e-3, 10);
    LmConfig cfg;
    cfg.max_iterations = 8;
    const OptimizationTrace base = optimize(linear_start(m), data, cfg);
    ConcatenatedRecord perturbed = data;
    const auto mask = data.cost_mask();
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (std::size_t t = 0; t < mask.size(); ++t)
        if (!mask[t]) perturbed.y(static_cast<Eigen::Index>(t), 0) += 5.0 * nd(rng);
    const OptimizationTrace other = optimize(linear_start(m), perturbed, cfg);
    CHECK(other.costs == base.costs);
    CHECK(other.lambdas == base.lambdas);
    CHECK(other.last().parameters() == base.last().parameters());
    CHECK(weighted_cost(base.last(), perturbed, std::nullopt) == weighted_cost(base.last(), data, std::nullopt));
}

TEST_CASE("frequency weighting falls back to uniform when t2 cuts periods") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 64, 1, 8);
    ConcatenatedRecord cut = data;
    cut.t2 = 5;
    FrequencyWeighting W;
    W.N = 64;
    W.weight.assign(33, CMatrix::Identity(1, 1));
    LmConfig cfg;
    cfg.max_iterations = 2;
    cfg.weighting = W;
    const OptimizationTrace tr = optimize(linear_start(m), cut, cfg);
    CHECK_FALSE(tr.warnings.empty());
    CHECK(weighted_cost(linear_start(m), cut, W) == weighted_cost(linear_start(m), cut, std::nullopt));
}

TEST_CASE("inverse noise weighting") {
    OutputNoiseCovariance cov;
    cov.N = 8;
    for (int k = 0; k <= 4; ++k) {
        cov.lines.push_back(k);
        cov.cov.push_back(CMatrix::Identity(1, 1) * (0.5 * (k + 1)));
    }
    const FrequencyWeighting W = inverse_noise_weighting(cov);
    CHECK(W.N == 8);
    REQUIRE(W.weight.size() == 5);
    for (int k = 0; k <= 4; ++k) CHECK(std::abs(W.weight[static_cast<std::size_t>(k)](0, 0) - 1.0 / (0.5 * (k + 1))) < 1e-15);
}

TEST_CASE("model selection on validation data") {
    const PnlssModel truth = true_model();
    const ConcatenatedRecord val = periodic_data(truth, 128, 1, 9);

    OptimizationTrace single;
    single.models = {linear_start(truth)};
    single.costs = {1.0};
    single.lambdas = {1.0};
    CHECK(select_best(single, val).index == 0);

    // Training cost decreasing, validation best in the middle.
    OptimizationTrace tr;
    PnlssModel late = truth;
    late.set_E(0, 0, 0.2);
    tr.models = {linear_start(truth), truth, late};
    tr.costs = {3.0, 2.0, 1.0};
    tr.lambdas = {1.0, 0.5, 0.25};
    const ModelSelection sel = select_best(tr, val);
    CHECK(sel.index == 1);
    CHECK(sel.rel_rmse < 1e-12);
    CHECK(sel.scores.size() == 3);

    // Ties go to the later model.
    tr.models = {truth, truth};
    CHECK(select_best(tr, val).index == 1);
}

TEST_CASE("validation on the training data picks the last model") {
    const PnlssModel m = true_model();
    const ConcatenatedRecord data = periodic_data(m, 256, 2, 10, 1e-3);
    LmConfig cfg;
    cfg.max_iterations = 15;
    const OptimizationTrace tr = optimize(linear_start(m), data, cfg);
    REQUIRE(tr.models.size() > 1);
    CHECK(select_best(tr, data).index == tr.models.size() - 1);
}

TEST_CASE("every model diverging on validation is an error") {
    PnlssModel bad = true_model();
    bad.set_E(0, 0, 50.0);
    ConcatenatedRecord val = periodic_data(true_model(), 64, 1, 11);
    val.u *= 100.0;
    OptimizationTrace tr;
    tr.models = {bad};
    tr.costs = {1.0};
    tr.lambdas = {1.0};
    CHECK_THROWS_AS(select_best(tr, val), NumericalError);
    tr.models.clear();
    CHECK_THROWS_AS(select_best(tr, val), ConfigError);
}

}
