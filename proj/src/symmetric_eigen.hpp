#pragma once

#include <Eigen/Dense>
#include <string>

namespace qwalk::detail {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Full eigendecomposition of a real symmetric matrix (LAPACK dsyevd).
/// Throws DecompositionError tagged with `stage` on failure.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix,
                               const std::string& stage);

}  // namespace qwalk::detail
