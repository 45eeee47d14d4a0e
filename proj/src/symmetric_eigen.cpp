#include "symmetric_eigen.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qwalk/error.hpp"

namespace qwalk::detail {

namespace {

// Residual and norm of a handful of evenly spaced eigenpairs. O(n^2) per
// pair, so it catches a broken backend without a full O(n^3) check.
void spot_check(const Eigen::MatrixXd& matrix, const SymmetricEigen& eig,
                const std::string& stage) {
  const Eigen::Index n = matrix.rows();
  const double scale = std::max(matrix.cwiseAbs().rowwise().sum().maxCoeff(), 1.0);
  const Eigen::Index samples = std::min<Eigen::Index>(n, 8);
  for (Eigen::Index s = 0; s < samples; ++s) {
    const Eigen::Index k = samples == 1 ? 0 : s * (n - 1) / (samples - 1);
    const auto v = eig.vectors.col(k);
    const double residual = (matrix * v - eig.values[k] * v).norm();
    if (!(std::abs(v.norm() - 1.0) < 1e-8) || !(residual < 1e-8 * scale)) {
      throw DecompositionError(stage, "eigenpair " + std::to_string(k) +
                                          " failed verification (residual " +
                                          std::to_string(residual) + ")");
    }
  }
}

}  // namespace

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix,
                               const std::string& stage) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw InvalidArgument(stage + ": matrix must be square and non-empty");
  }
  if (!matrix.allFinite()) {
    throw DecompositionError(stage, "matrix has non-finite entries");
  }
  const Eigen::Index n = matrix.rows();
  SymmetricEigen out;
  if (n == 1) {
    out.values = matrix.diagonal();
    out.vectors = Eigen::MatrixXd::Identity(1, 1);
    return out;
  }

  // Householder reduction in Eigen, tridiagonal eigenproblem by MRRR
  // (dstemr), back-transformation in Eigen.
  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(matrix);
  Eigen::VectorXd diag = tri.diagonal();
  Eigen::VectorXd offdiag(n);
  offdiag.head(n - 1) = tri.subDiagonal();
  offdiag[n - 1] = 0.0;

  out.values.resize(n);
  Eigen::MatrixXd z(n, n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const auto ln = static_cast<lapack_int>(n);
  const lapack_int info = LAPACKE_dstemr(
      LAPACK_COL_MAJOR, 'V', 'A', ln, diag.data(), offdiag.data(), 0.0, 0.0,
      0, 0, &found, out.values.data(), z.data(), ln, ln, support.data(),
      &tryrac);
  if (info != 0 || found != ln) {
    throw DecompositionError(stage, "LAPACK dstemr failed with info = " +
                                        std::to_string(info) + ", " +
                                        std::to_string(found) + " of " +
                                        std::to_string(n) + " eigenpairs");
  }
  out.vectors = tri.matrixQ() * z;
  spot_check(matrix, out, stage);
  return out;
}

}  // namespace qwalk::detail
