#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qwalk/evolution.hpp"
#include "qwalk/lattice.hpp"

namespace qwalk {

/// Generator of a continuous-time random walk: off-diagonal hopping rates
/// (1/mm) and a diagonal that makes every column sum to zero.
struct RateMatrix {
  Eigen::MatrixXd entries;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(entries.rows());
  }
};

/// Rates equal the quantum couplings of the same lattice.
RateMatrix build_rate_matrix(const Lattice& lattice);
RateMatrix build_rate_matrix(std::size_t n,
                             std::span<const NeighborPair> pairs);

/// Reusable eigendecomposition of a symmetric generator.
class ClassicalPropagator {
 public:
  explicit ClassicalPropagator(const RateMatrix& rates);

  /// p(z) = exp(L z) p0.
  std::vector<double> evolve(std::span<const double> p0, double z) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

std::vector<double> evolve_classical(const RateMatrix& rates,
                                     std::span<const double> p0, double z);

EvolutionTrace classical_trace(const RateMatrix& rates,
                               std::span<const double> p0,
                               std::span<const double> z_values,
                               GridShape shape, unsigned threads = 1);

/// Normalized isotropic Gaussian in spacing units centred on `origin`.
ProbabilityGrid gaussian_reference(GridShape shape, double sigma_units,
                                   Site origin);

}  // namespace qwalk
