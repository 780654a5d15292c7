#include "pnlss/basis.hpp"

#include "pnlss/errors.hpp"
#include "pnlss/log.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace pnlss {

namespace {

// All exponent vectors of length `vars` summing to `degree`, lexicographically descending.
void enumerate(std::size_t vars, int degree, std::vector<int>& current, std::size_t pos,
               std::vector<std::vector<int>>& out) {
    if (pos + 1 == vars) {
        current[pos] = degree;
        out.push_back(current);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        current[pos] = e;
        enumerate(vars, degree - e, current, pos + 1, out);
    }
}

} // namespace

MonomialBasis build_basis(std::size_t n, std::size_t m, std::vector<int> degrees) {
    if (degrees.empty()) throw ConfigError("build_basis: degree set is empty");
    if (n + m == 0) throw ConfigError("build_basis: no variables");
    std::sort(degrees.begin(), degrees.end());
    degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
    if (degrees.front() < 0) throw ConfigError("build_basis: degrees must be >= 0");
    if (std::find(degrees.begin(), degrees.end(), 1) != degrees.end())
        log::warn("build_basis: degree 1 duplicates the linear part of the model");

    MonomialBasis basis{n, m, degrees, {}};
    std::vector<int> current(n + m, 0);
    for (int d : degrees) enumerate(n + m, d, current, 0, basis.exponents);
    return basis;
}

MonomialBasis basis_from_exponents(std::size_t n, std::size_t m, std::vector<std::vector<int>> exponents) {
    MonomialBasis basis{n, m, {}, std::move(exponents)};
    for (const auto& e : basis.exponents) {
        if (e.size() != n + m) throw ConfigError("basis: exponent vector has wrong length");
        if (std::any_of(e.begin(), e.end(), [](int v) { return v < 0; }))
            throw ConfigError("basis: negative exponent");
        basis.degrees.push_back(std::accumulate(e.begin(), e.end(), 0));
    }
    std::sort(basis.degrees.begin(), basis.degrees.end());
    basis.degrees.erase(std::unique(basis.degrees.begin(), basis.degrees.end()), basis.degrees.end());
    return basis;
}

ActiveSelection parse_active_rule(std::string_view name) {
    if (name == "full") return ActiveSelection::full();
    if (name == "statesonly" || name == "states-only") return ActiveSelection::states_only();
    if (name == "inputsonly" || name == "inputs-only") return ActiveSelection::inputs_only();
    if (name == "none" || name == "empty") return ActiveSelection::none();
    throw ConfigError("unknown active-term rule '" + std::string(name) + "'");
}

std::vector<bool> select_active(const MonomialBasis& basis, const ActiveSelection& selection) {
    std::vector<bool> mask(basis.size(), false);
    const auto n = static_cast<std::ptrdiff_t>(basis.states);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto& e = basis.exponents[i];
        switch (selection.rule) {
        case ActiveRule::Full: mask[i] = true; break;
        case ActiveRule::StatesOnly: mask[i] = std::all_of(e.begin() + n, e.end(), [](int v) { return v == 0; }); break;
        case ActiveRule::InputsOnly: mask[i] = std::all_of(e.begin(), e.begin() + n, [](int v) { return v == 0; }); break;
        case ActiveRule::Explicit: break;
        }
    }
    if (selection.rule == ActiveRule::Explicit) {
        for (auto idx : selection.indices) {
            if (idx >= basis.size())
                throw ConfigError("select_active: index " + std::to_string(idx) + " out of range");
            mask[idx] = true;
        }
    }
    return mask;
}

BasisEvaluator::BasisEvaluator(const MonomialBasis& basis) : basis_(&basis) {
    factors_.reserve(basis.size());
    for (const auto& e : basis.exponents) {
        std::vector<std::pair<int, int>> f;
        for (std::size_t j = 0; j < e.size(); ++j)
            if (e[j] > 0) f.emplace_back(static_cast<int>(j), e[j]);
        factors_.push_back(std::move(f));
    }
    int max_power = 0;
    for (const auto& e : basis.exponents)
        for (int v : e) max_power = std::max(max_power, v);
    powers_.resize(static_cast<Eigen::Index>(basis.variables()), max_power + 1);
}

void BasisEvaluator::fill_powers(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const {
    const auto n = static_cast<Eigen::Index>(basis_->states);
    if (x.size() != n || u.size() != static_cast<Eigen::Index>(basis_->inputs))
        throw ConfigError("basis evaluation: dimension mismatch");
    for (Eigen::Index j = 0; j < powers_.rows(); ++j) {
        const double v = j < n ? x(j) : u(j - n);
        powers_(j, 0) = 1.0;
        for (Eigen::Index k = 1; k < powers_.cols(); ++k) powers_(j, k) = powers_(j, k - 1) * v;
    }
}

void BasisEvaluator::evaluate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                              Vector& values) const {
    fill_powers(x, u);
    values.resize(static_cast<Eigen::Index>(factors_.size()));
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        double v = 1.0;
        for (auto [var, pw] : factors_[i]) v *= powers_(var, pw);
        values(static_cast<Eigen::Index>(i)) = v;
    }
}

void BasisEvaluator::evaluate_with_state_derivative(const Eigen::Ref<const Vector>& x,
                                                    const Eigen::Ref<const Vector>& u, Vector& values,
                                                    Matrix& dx) const {
    fill_powers(x, u);
    const auto nb = static_cast<Eigen::Index>(factors_.size());
    const auto n = static_cast<int>(basis_->states);
    values.resize(nb);
    dx.setZero(nb, n);
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const auto& f = factors_[i];
        double v = 1.0;
        for (auto [var, pw] : f) v *= powers_(var, pw);
        values(static_cast<Eigen::Index>(i)) = v;
        for (std::size_t a = 0; a < f.size(); ++a) {
            const auto [var, pw] = f[a];
            if (var >= n) continue;
            double d = pw * powers_(var, pw - 1);
            for (std::size_t b = 0; b < f.size(); ++b)
                if (b != a) d *= powers_(f[b].first, f[b].second);
            dx(static_cast<Eigen::Index>(i), var) = d;
        }
    }
}

Vector evaluate_basis(const MonomialBasis& basis, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& u) {
    Vector values;
    BasisEvaluator(basis).evaluate(x, u, values);
    return values;
}

} // namespace pnlss
