#include "oracles.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/model.hpp"

#include <doctest.h>

using namespace pnlss;

namespace {

Matrix random_input(Eigen::Index T, Eigen::Index m, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    Matrix u(T, m);
    for (auto& v : u.reshaped()) v = nd(rng);
    return u;
}

PnlssModel random_nonlinear(std::uint64_t seed) {
    const LinearStateSpace lin = oracle::random_stable(2, 1, 2, 0.7, seed);
    PnlssModel model = init_from_linear(lin, {2, 3}, {2}, ActiveSelection::full(), ActiveSelection::states_only());
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> nd(0.0, 0.05);
    Matrix E = model.E(), F = model.F();
    for (auto& v : E.reshaped()) v = nd(rng);
    for (Eigen::Index c = 0; c < F.cols(); ++c)
        if (model.active_output()[static_cast<std::size_t>(c)])
            for (Eigen::Index r = 0; r < F.rows(); ++r) F(r, c) = nd(rng);
    model.set_E(E);
    model.set_F(F);
    return model;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

} // namespace

TEST_SUITE("model") {

TEST_CASE("states-only state terms, no output nonlinearity") {
    const LinearStateSpace lin = oracle::random_stable(2, 1, 1, 0.8, 1);
    const PnlssModel m = init_from_linear(lin, {2, 3}, {2, 3}, ActiveSelection::states_only(), ActiveSelection::none());
    CHECK(m.E().isZero(0.0));
    CHECK(m.F().isZero(0.0));
    CHECK(std::none_of(m.active_output().begin(), m.active_output().end(), [](bool b) { return b; }));
    CHECK(m.state_basis().size() == 16);
    CHECK(std::count(m.active_state().begin(), m.active_state().end(), true) == 3 + 4);
    CHECK(m.parameter_count() == 4 + 2 + 2 + 1 + 2 * 7);
    CHECK(m.x0 == Vector::Zero(2));
}

TEST_CASE("initialized models simulate like their linear part") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const LinearStateSpace lin = oracle::random_stable(3, 2, 2, 0.9, seed);
        const PnlssModel m = init_from_linear(lin, {2, 3}, {2, 3}, ActiveSelection::full(), ActiveSelection::full());
        const Matrix u = random_input(300, 2, seed);
        const Matrix yl = simulate_linear(lin, u);
        const SimulationResult sim = simulate(m, u);
        CHECK_FALSE(sim.diverged);
        CHECK((sim.y - yl).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, yl.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("first-order impulse response") {
    const LinearStateSpace lin(scalar(0.5), scalar(1.0), scalar(1.0), scalar(0.0));
    const PnlssModel m = init_from_linear(lin, {}, {}, ActiveSelection::none(), ActiveSelection::none());
    Matrix u = Matrix::Zero(6, 1);
    u(0, 0) = 1.0;
    const SimulationResult sim = simulate(m, u);
    const double expected[] = {0, 1, 0.5, 0.25, 0.125, 0.0625};
    for (int t = 0; t < 6; ++t) CHECK(sim.y(t, 0) == expected[t]);
}

TEST_CASE("quadratic state term against a hand recursion") {
    const LinearStateSpace lin(scalar(0.0), scalar(1.0), scalar(1.0), scalar(0.0));
    PnlssModel m = init_from_linear(lin, {2}, {}, ActiveSelection::full(), ActiveSelection::none());
    REQUIRE(m.state_basis().exponents == std::vector<std::vector<int>>{{2, 0}, {1, 1}, {0, 2}});
    const double e = 0.3;
    m.set_E(0, 0, e);
    Matrix u = Matrix::Zero(5, 1);
    u(0, 0) = 1.0;
    const SimulationResult sim = simulate(m, u);
    // x(k+1) = u(k) + e x(k)^2
    double x = 0.0;
    for (int k = 0; k < 5; ++k) {
        CHECK(sim.x(k, 0) == doctest::Approx(x).epsilon(1e-15));
        x = u(k, 0) + e * x * x;
    }
    CHECK(sim.y(2, 0) == doctest::Approx(e));
    CHECK(sim.y(3, 0) == doctest::Approx(e * e * e));
}

TEST_CASE("simulation agrees with the naive recursion") {
    const PnlssModel m = random_nonlinear(4);
    const Matrix u = random_input(200, 1, 9, 0.5);
    const SimulationResult sim = simulate(m, u);
    const Matrix ref = oracle::naive_simulate(m, u);
    CHECK((sim.y - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("divergence is reported, not thrown") {
    const LinearStateSpace lin(scalar(0.5), scalar(1.0), scalar(1.0), scalar(0.0));
    PnlssModel m = init_from_linear(lin, {2}, {}, ActiveSelection::states_only(), ActiveSelection::none());
    m.set_E(0, 0, 1.0);
    const Matrix u = Matrix::Constant(100, 1, 2.0);
    const SimulationResult sim = simulate(m, u);
    CHECK(sim.diverged);
    CHECK(sim.diverged_at < 100);
    CHECK(std::isnan(sim.y(99, 0)));
    CHECK_THROWS_AS(jacobian(m, u, Vector::Zero(1)), NumericalError);
}

TEST_CASE("inactive columns stay zero") {
    const LinearStateSpace lin = oracle::random_stable(2, 1, 1, 0.5, 2);
    PnlssModel m = init_from_linear(lin, {2}, {2}, ActiveSelection::states_only(), ActiveSelection::none());
    CHECK_THROWS_AS(m.set_E(0, 2, 1.0), ConfigError); // x1 u is not a states-only monomial
    CHECK_THROWS_AS(m.set_F(0, 0, 1.0), ConfigError);
    Matrix E = m.E();
    E(1, 5) = 0.1;
    CHECK_THROWS_AS(m.set_E(E), ConfigError);
    CHECK(m.E().isZero(0.0));
    const Matrix u = random_input(50, 1, 3);
    const Matrix before = simulate(m, u).y;
    Vector theta = m.parameters();
    m.set_parameters(theta);
    CHECK(simulate(m, u).y == before);
}

TEST_CASE("parameter vector layout") {
    const PnlssModel m = random_nonlinear(6);
    const auto labels = m.parameter_labels();
    REQUIRE(labels.size() == m.parameter_count());
    CHECK(labels.front() == "A(0,0)");
    CHECK(labels[4] == "B(0,0)");
    CHECK(labels[6] == "C(0,0)");
    CHECK(labels[10] == "D(0,0)");
    CHECK(labels[12] == "E(0,0)");
    PnlssModel copy = m;
    Vector theta = m.parameters();
    theta(0) += 1.0;
    copy.set_parameters(theta);
    CHECK(copy.linear().A(0, 0) == m.linear().A(0, 0) + 1.0);
    CHECK(copy.parameters() == theta);
    CHECK_THROWS_AS(copy.set_parameters(Vector::Zero(3)), ConfigError);
}

TEST_CASE("Jacobian closed forms for C and D") {
    const PnlssModel m = random_nonlinear(8);
    const Matrix u = random_input(40, 1, 5, 0.2);
    REQUIRE_FALSE(simulate(m, u).diverged);
    const Matrix J = jacobian(m, u, Vector::Zero(2));
    const SimulationResult sim = simulate(m, u);
    const auto p = static_cast<Eigen::Index>(m.outputs());
    REQUIRE(J.rows() == 40 * p);
    // Columns: A (4), B (2), C (2x2), D (2x1).
    for (Eigen::Index t = 0; t < 40; ++t)
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < 2; ++j) {
                const double expected = sim.x(t, j);
                CHECK(J(t * p + i, 6 + i * 2 + j) == doctest::Approx(expected));
                CHECK(J(t * p + (1 - i), 6 + i * 2 + j) == 0.0);
            }
            CHECK(J(t * p + i, 10 + i) == u(t, 0));
            CHECK(J(t * p + (1 - i), 10 + i) == 0.0);
        }
}

TEST_CASE("sensitivity Jacobian matches central differences for every parameter class") {
    const PnlssModel m = random_nonlinear(10);
    const Matrix u = random_input(200, 1, 11, 0.5);
    const Matrix J = jacobian(m, u, Vector::Zero(2));
    const Matrix Jfd = oracle::fd_jacobian(m, u);
    const auto labels = m.parameter_labels();
    for (char cls : {'A', 'B', 'C', 'D', 'E', 'F'}) {
        double worst = 0.0;
        int columns = 0;
        for (Eigen::Index j = 0; j < J.cols(); ++j) {
            if (labels[static_cast<std::size_t>(j)][0] != cls) continue;
            const double scale = std::max(Jfd.col(j).cwiseAbs().maxCoeff(), 1e-12);
            worst = std::max(worst, (J.col(j) - Jfd.col(j)).cwiseAbs().maxCoeff() / scale);
            ++columns;
        }
        CAPTURE(cls);
        CHECK(columns > 0);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("nonzero initial state") {
    const PnlssModel m = random_nonlinear(12);
    Vector x0(2);
    x0 << 0.3, -0.2;
    const Matrix u = random_input(30, 1, 2, 0.2);
    const SimulationResult sim = simulate(m, u, x0);
    REQUIRE_FALSE(sim.diverged);
    CHECK(sim.x.row(0).transpose() == x0);
    PnlssModel with = m;
    with.x0 = x0;
    CHECK(simulate(with, u).y == sim.y);
}

}
