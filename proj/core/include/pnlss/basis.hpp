#pragma once

#include "pnlss/types.hpp"

#include <string_view>

namespace pnlss {

/// Monomials in v = [x_1..x_n, u_1..u_m] whose total degree lies in `degrees`.
///
/// Ordering: ascending total degree, then lexicographically descending
/// exponent vectors (x_1 > ... > x_n > u_1 > ... > u_m). For n = 2, m = 1 and
/// degree 2 this gives x1^2, x1 x2, x1 u, x2^2, x2 u, u^2.
struct MonomialBasis {
    std::size_t states = 0;
    std::size_t inputs = 0;
    std::vector<int> degrees; ///< sorted, unique
    std::vector<std::vector<int>> exponents;

    std::size_t size() const { return exponents.size(); }
    std::size_t variables() const { return states + inputs; }
    int max_degree() const { return degrees.empty() ? 0 : degrees.back(); }
    bool operator==(const MonomialBasis&) const = default;
};

MonomialBasis build_basis(std::size_t n, std::size_t m, std::vector<int> degrees);

/// Rebuild a basis from explicit exponent vectors (deserialization).
MonomialBasis basis_from_exponents(std::size_t n, std::size_t m, std::vector<std::vector<int>> exponents);

enum class ActiveRule { Full, StatesOnly, InputsOnly, Explicit };

struct ActiveSelection {
    ActiveRule rule = ActiveRule::Full;
    std::vector<std::size_t> indices; ///< Explicit only

    static ActiveSelection full() { return {ActiveRule::Full, {}}; }
    static ActiveSelection states_only() { return {ActiveRule::StatesOnly, {}}; }
    static ActiveSelection inputs_only() { return {ActiveRule::InputsOnly, {}}; }
    static ActiveSelection none() { return {ActiveRule::Explicit, {}}; }
    static ActiveSelection explicit_set(std::vector<std::size_t> idx) { return {ActiveRule::Explicit, std::move(idx)}; }
};

ActiveSelection parse_active_rule(std::string_view name);

std::vector<bool> select_active(const MonomialBasis& basis, const ActiveSelection& selection);

/// zeta_i = prod_j v_j^{e_ij} with 0^0 = 1.
Vector evaluate_basis(const MonomialBasis& basis, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& u);

/// Monomial values and their partial derivatives with respect to the states.
class BasisEvaluator {
public:
    explicit BasisEvaluator(const MonomialBasis& basis);

    void evaluate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u, Vector& values) const;
    /// values (size nb) and d(values)/dx (nb x n).
    void evaluate_with_state_derivative(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                                        Vector& values, Matrix& dx) const;

private:
    void fill_powers(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const;

    const MonomialBasis* basis_;
    // Sparse form: (variable, power) factors per monomial.
    std::vector<std::vector<std::pair<int, int>>> factors_;
    mutable Matrix powers_; ///< variables x (max_degree + 1)
};

} // namespace pnlss
