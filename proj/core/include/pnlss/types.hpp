#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace pnlss {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Frequency line indices (DFT bins) of a period of length N.
using LineSet = std::vector<int>;

} // namespace pnlss
