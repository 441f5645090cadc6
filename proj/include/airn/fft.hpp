#pragma once

#include <Eigen/Dense>

namespace airn::detail {

bool is_power_of_two(int n);

/// Forward DFT with 1/sqrt(N) scaling (unitary).
Eigen::VectorXcd dft_orthonormal(const Eigen::VectorXcd& x);

/// Inverse DFT with 1/sqrt(N) scaling (unitary); exact inverse of
/// dft_orthonormal.
Eigen::VectorXcd idft_orthonormal(const Eigen::VectorXcd& x);

}  // namespace airn::detail
