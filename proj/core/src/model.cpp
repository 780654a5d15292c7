#include "pnlss/model.hpp"

#include "pnlss/errors.hpp"

#include <cmath>
#include <limits>

namespace pnlss {

namespace {

std::vector<std::size_t> active_columns(const std::vector<bool>& mask) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) cols.push_back(j);
    return cols;
}

void check_inactive_zero(const Matrix& M, const std::vector<bool>& mask, const char* name) {
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) continue;
        if (!M.col(static_cast<Eigen::Index>(j)).isZero(0.0))
            throw ConfigError(std::string("pnlss model: nonzero value in inactive column of ") + name);
    }
}

} // namespace

PnlssModel::PnlssModel(LinearStateSpace linear, MonomialBasis state_basis, MonomialBasis output_basis,
                       std::vector<bool> active_state, std::vector<bool> active_output)
    : linear_(std::move(linear)), state_basis_(std::move(state_basis)), output_basis_(std::move(output_basis)),
      active_state_(std::move(active_state)), active_output_(std::move(active_output)) {
    linear_.validate();
    E_ = Matrix::Zero(linear_.A.rows(), static_cast<Eigen::Index>(state_basis_.size()));
    F_ = Matrix::Zero(linear_.C.rows(), static_cast<Eigen::Index>(output_basis_.size()));
    x0 = Vector::Zero(linear_.A.rows());
    validate();
}

void PnlssModel::validate() const {
    linear_.validate();
    for (const MonomialBasis* b : {&state_basis_, &output_basis_}) {
        if (b->states != order() || b->inputs != inputs())
            throw ConfigError("pnlss model: basis dimensions do not match the linear part");
    }
    if (active_state_.size() != state_basis_.size() || active_output_.size() != output_basis_.size())
        throw ConfigError("pnlss model: active masks do not match the bases");
    if (E_.rows() != linear_.A.rows() || E_.cols() != static_cast<Eigen::Index>(state_basis_.size()))
        throw ConfigError("pnlss model: E has wrong shape");
    if (F_.rows() != linear_.C.rows() || F_.cols() != static_cast<Eigen::Index>(output_basis_.size()))
        throw ConfigError("pnlss model: F has wrong shape");
    if (x0.size() != linear_.A.rows()) throw ConfigError("pnlss model: x0 has wrong length");
    check_inactive_zero(E_, active_state_, "E");
    check_inactive_zero(F_, active_output_, "F");
}

void PnlssModel::set_E(const Matrix& E) {
    if (E.rows() != E_.rows() || E.cols() != E_.cols()) throw ConfigError("set_E: shape mismatch");
    check_inactive_zero(E, active_state_, "E");
    E_ = E;
}

void PnlssModel::set_F(const Matrix& F) {
    if (F.rows() != F_.rows() || F.cols() != F_.cols()) throw ConfigError("set_F: shape mismatch");
    check_inactive_zero(F, active_output_, "F");
    F_ = F;
}

void PnlssModel::set_E(std::size_t row, std::size_t col, double value) {
    if (row >= static_cast<std::size_t>(E_.rows()) || col >= active_state_.size())
        throw ConfigError("set_E: index out of range");
    if (!active_state_[col]) throw ConfigError("set_E: column " + std::to_string(col) + " is inactive");
    E_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = value;
}

void PnlssModel::set_F(std::size_t row, std::size_t col, double value) {
    if (row >= static_cast<std::size_t>(F_.rows()) || col >= active_output_.size())
        throw ConfigError("set_F: index out of range");
    if (!active_output_[col]) throw ConfigError("set_F: column " + std::to_string(col) + " is inactive");
    F_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = value;
}

std::size_t PnlssModel::parameter_count() const {
    const auto& s = linear_;
    return static_cast<std::size_t>(s.A.size() + s.B.size() + s.C.size() + s.D.size()) +
           order() * active_columns(active_state_).size() + outputs() * active_columns(active_output_).size();
}

Vector PnlssModel::parameters() const {
    Vector theta(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index pos = 0;
    for (const Matrix* M : {&linear_.A, &linear_.B, &linear_.C, &linear_.D})
        for (Eigen::Index i = 0; i < M->rows(); ++i)
            for (Eigen::Index j = 0; j < M->cols(); ++j) theta(pos++) = (*M)(i, j);
    const auto ce = active_columns(active_state_);
    for (Eigen::Index i = 0; i < E_.rows(); ++i)
        for (auto j : ce) theta(pos++) = E_(i, static_cast<Eigen::Index>(j));
    const auto cf = active_columns(active_output_);
    for (Eigen::Index i = 0; i < F_.rows(); ++i)
        for (auto j : cf) theta(pos++) = F_(i, static_cast<Eigen::Index>(j));
    return theta;
}

void PnlssModel::set_parameters(const Vector& theta) {
    if (static_cast<std::size_t>(theta.size()) != parameter_count())
        throw ConfigError("set_parameters: wrong parameter count");
    Eigen::Index pos = 0;
    for (Matrix* M : {&linear_.A, &linear_.B, &linear_.C, &linear_.D})
        for (Eigen::Index i = 0; i < M->rows(); ++i)
            for (Eigen::Index j = 0; j < M->cols(); ++j) (*M)(i, j) = theta(pos++);
    const auto ce = active_columns(active_state_);
    for (Eigen::Index i = 0; i < E_.rows(); ++i)
        for (auto j : ce) E_(i, static_cast<Eigen::Index>(j)) = theta(pos++);
    const auto cf = active_columns(active_output_);
    for (Eigen::Index i = 0; i < F_.rows(); ++i)
        for (auto j : cf) F_(i, static_cast<Eigen::Index>(j)) = theta(pos++);
}

std::vector<std::string> PnlssModel::parameter_labels() const {
    std::vector<std::string> labels;
    auto add = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                labels.push_back(std::string(name) + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
    };
    add("A", linear_.A.rows(), linear_.A.cols());
    add("B", linear_.B.rows(), linear_.B.cols());
    add("C", linear_.C.rows(), linear_.C.cols());
    add("D", linear_.D.rows(), linear_.D.cols());
    for (Eigen::Index i = 0; i < E_.rows(); ++i)
        for (auto j : active_columns(active_state_))
            labels.push_back("E(" + std::to_string(i) + "," + std::to_string(j) + ")");
    for (Eigen::Index i = 0; i < F_.rows(); ++i)
        for (auto j : active_columns(active_output_))
            labels.push_back("F(" + std::to_string(i) + "," + std::to_string(j) + ")");
    return labels;
}

PnlssModel init_from_linear(const LinearStateSpace& linear, const std::vector<int>& nx_degrees,
                            const std::vector<int>& ny_degrees, const ActiveSelection& state_rule,
                            const ActiveSelection& output_rule) {
    linear.validate();
    auto make_basis = [&](const std::vector<int>& degrees) {
        if (degrees.empty()) return MonomialBasis{linear.order(), linear.inputs(), {}, {}};
        return build_basis(linear.order(), linear.inputs(), degrees);
    };
    MonomialBasis sb = make_basis(nx_degrees);
    MonomialBasis ob = make_basis(ny_degrees);
    auto as = select_active(sb, state_rule);
    auto ao = select_active(ob, output_rule);
    return PnlssModel(linear, std::move(sb), std::move(ob), std::move(as), std::move(ao));
}

SimulationResult simulate(const PnlssModel& model, const Eigen::Ref<const Matrix>& u) {
    return simulate(model, u, model.x0);
}

SimulationResult simulate(const PnlssModel& model, const Eigen::Ref<const Matrix>& u, const Vector& x0) {
    const auto& lin = model.linear();
    const auto n = lin.A.rows();
    if (u.cols() != lin.B.cols()) throw ConfigError("simulate: input width does not match the model");
    if (x0.size() != n) throw ConfigError("simulate: initial state has wrong length");

    const BasisEvaluator zeta(model.state_basis());
    const BasisEvaluator eta(model.output_basis());
    const bool has_E = model.E().size() > 0;
    const bool has_F = model.F().size() > 0;

    SimulationResult sim;
    sim.y.resize(u.rows(), lin.C.rows());
    sim.x.resize(u.rows(), n);
    Vector x = x0, z, h, ut;
    for (Eigen::Index t = 0; t < u.rows(); ++t) {
        ut = u.row(t).transpose();
        sim.x.row(t) = x.transpose();
        Vector y = lin.C * x + lin.D * ut;
        if (has_F) {
            eta.evaluate(x, ut, h);
            y += model.F() * h;
        }
        sim.y.row(t) = y.transpose();
        Vector next = lin.A * x + lin.B * ut;
        if (has_E) {
            zeta.evaluate(x, ut, z);
            next += model.E() * z;
        }
        x = std::move(next);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceThreshold) {
            if (t + 1 < u.rows()) {
                sim.diverged = true;
                sim.diverged_at = static_cast<std::size_t>(t + 1);
                const double nan = std::numeric_limits<double>::quiet_NaN();
                sim.y.bottomRows(u.rows() - t - 1).setConstant(nan);
                sim.x.bottomRows(u.rows() - t - 1).setConstant(nan);
                break;
            }
        }
    }
    if (!sim.diverged && !sim.y.allFinite()) {
        sim.diverged = true;
        sim.diverged_at = static_cast<std::size_t>(u.rows());
    }
    return sim;
}

Matrix jacobian(const PnlssModel& model, const Eigen::Ref<const Matrix>& u, const Vector& x0) {
    return jacobian(model, u, simulate(model, u, x0));
}

Matrix jacobian(const PnlssModel& model, const Eigen::Ref<const Matrix>& u, const SimulationResult& sim) {
    if (sim.diverged) throw NumericalError("jacobian: trajectory diverges");
    const auto& lin = model.linear();
    const auto n = lin.A.rows(), m = lin.B.cols(), p = lin.C.rows();
    const auto T = u.rows();
    const auto np = static_cast<Eigen::Index>(model.parameter_count());
    const auto ce = active_columns(model.active_state());
    const auto cf = active_columns(model.active_output());

    const Eigen::Index offB = n * n, offC = offB + n * m, offD = offC + p * n, offE = offD + p * m;
    const Eigen::Index offF = offE + n * static_cast<Eigen::Index>(ce.size());

    const BasisEvaluator zeta(model.state_basis());
    const BasisEvaluator eta(model.output_basis());
    Vector z, h, ut, x;
    Matrix Zx, Hx;

    Matrix J(T * p, np);
    Matrix S = Matrix::Zero(n, np);
    Matrix S_next(n, np);
    for (Eigen::Index t = 0; t < T; ++t) {
        x = sim.x.row(t).transpose();
        ut = u.row(t).transpose();
        zeta.evaluate_with_state_derivative(x, ut, z, Zx);
        eta.evaluate_with_state_derivative(x, ut, h, Hx);

        // Output sensitivity.
        Matrix Jy = lin.C;
        if (Hx.rows() > 0) Jy += model.F() * Hx;
        auto dY = J.middleRows(t * p, p);
        dY.noalias() = Jy * S;
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) dY(i, offC + i * n + j) += x(j);
            for (Eigen::Index j = 0; j < m; ++j) dY(i, offD + i * m + j) += ut(j);
            for (std::size_t c = 0; c < cf.size(); ++c)
                dY(i, offF + i * static_cast<Eigen::Index>(cf.size()) + static_cast<Eigen::Index>(c)) +=
                    h(static_cast<Eigen::Index>(cf[c]));
        }

        // State sensitivity for the next step.
        Matrix Jx = lin.A;
        if (Zx.rows() > 0) Jx += model.E() * Zx;
        S_next.noalias() = Jx * S;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) S_next(i, i * n + j) += x(j);
            for (Eigen::Index j = 0; j < m; ++j) S_next(i, offB + i * m + j) += ut(j);
            for (std::size_t c = 0; c < ce.size(); ++c)
                S_next(i, offE + i * static_cast<Eigen::Index>(ce.size()) + static_cast<Eigen::Index>(c)) +=
                    z(static_cast<Eigen::Index>(ce[c]));
        }
        S.swap(S_next);
    }
    return J;
}

} // namespace pnlss
