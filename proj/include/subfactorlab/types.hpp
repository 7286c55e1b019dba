#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace sfl {

using cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Coefficients below this magnitude are treated as exact zeros after arithmetic.
inline constexpr double kPruneEps = 1e-14;

// Default verification tolerance; the CLI can override it.
inline constexpr double kDefaultTol = 1e-9;

inline bool approx_zero(cx z, double tol) { return std::abs(z) <= tol; }

inline double max_abs(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace sfl
