#pragma once

#include "pnlss/basis.hpp"
#include "pnlss/state_space.hpp"

#include <string>

namespace pnlss {

/// Polynomial nonlinear state-space model
///   x(k+1) = A x(k) + B u(k) + E zeta(x(k), u(k))
///   y(k)   = C x(k) + D u(k) + F eta(x(k), u(k))
///
/// Only the columns of E and F flagged active are free parameters; inactive
/// columns are held at exactly zero.
class PnlssModel {
public:
    PnlssModel() = default;
    PnlssModel(LinearStateSpace linear, MonomialBasis state_basis, MonomialBasis output_basis,
               std::vector<bool> active_state, std::vector<bool> active_output);

    const LinearStateSpace& linear() const { return linear_; }
    LinearStateSpace& linear() { return linear_; }
    const Matrix& E() const { return E_; }
    const Matrix& F() const { return F_; }
    const MonomialBasis& state_basis() const { return state_basis_; }
    const MonomialBasis& output_basis() const { return output_basis_; }
    const std::vector<bool>& active_state() const { return active_state_; }
    const std::vector<bool>& active_output() const { return active_output_; }

    std::size_t order() const { return linear_.order(); }
    std::size_t inputs() const { return linear_.inputs(); }
    std::size_t outputs() const { return linear_.outputs(); }

    /// Rejects nonzero values in inactive columns.
    void set_E(const Matrix& E);
    void set_F(const Matrix& F);
    void set_E(std::size_t row, std::size_t col, double value);
    void set_F(std::size_t row, std::size_t col, double value);

    /// Initial state used by simulate when none is given (default zero).
    Vector x0;

    // Parameter vector: A, B, C, D row-major, then active entries of E and F
    // (row-major over active columns).
    std::size_t parameter_count() const;
    Vector parameters() const;
    void set_parameters(const Vector& theta);
    /// Human-readable name per parameter, e.g. "A(0,1)" or "E(1,3)".
    std::vector<std::string> parameter_labels() const;

    void validate() const;

private:
    LinearStateSpace linear_;
    Matrix E_, F_;
    MonomialBasis state_basis_, output_basis_;
    std::vector<bool> active_state_, active_output_;
};

/// Model with E = F = 0 on top of a linear initialization.
PnlssModel init_from_linear(const LinearStateSpace& linear, const std::vector<int>& nx_degrees,
                            const std::vector<int>& ny_degrees, const ActiveSelection& state_rule,
                            const ActiveSelection& output_rule);

/// States beyond this magnitude mark a simulation as divergent.
inline constexpr double kDivergenceThreshold = 1e10;

struct SimulationResult {
    Matrix y; ///< T x p (rows after divergence are NaN)
    Matrix x; ///< T x n, x(k) before the update at step k
    bool diverged = false;
    std::size_t diverged_at = 0;
};

SimulationResult simulate(const PnlssModel& model, const Eigen::Ref<const Matrix>& u);
SimulationResult simulate(const PnlssModel& model, const Eigen::Ref<const Matrix>& u, const Vector& x0);

/// dy/dtheta via the forward sensitivity recursion; row t*p + i holds y_i(t).
/// Throws NumericalError when the trajectory diverges.
Matrix jacobian(const PnlssModel& model, const Eigen::Ref<const Matrix>& u, const Vector& x0);
Matrix jacobian(const PnlssModel& model, const Eigen::Ref<const Matrix>& u, const SimulationResult& sim);

} // namespace pnlss
