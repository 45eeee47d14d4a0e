#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qwalk/lattice.hpp"

namespace qwalk {

/// Single-excitation tight-binding Hamiltonian with a uniform propagation
/// constant on the diagonal and pairwise couplings off it (all in 1/mm).
///
/// Both a dense matrix and the pair list are kept: the dense form feeds the
/// eigendecomposition, the pair list gives a cheap matrix-vector product.
class Hamiltonian {
 public:
  Hamiltonian(std::size_t n, double beta, std::vector<NeighborPair> pairs);

  std::size_t size() const noexcept { return n_; }
  double beta() const noexcept { return beta_; }
  const Eigen::MatrixXd& dense() const noexcept { return dense_; }
  const std::vector<NeighborPair>& pairs() const noexcept { return pairs_; }

  /// Returns H * x using the pair list.
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

  /// Hamiltonian with every entry multiplied by `factor`.
  Hamiltonian scaled(double factor) const;

  /// Sum of absolute values in the worst row; an upper bound on ||H||_2.
  double norm_bound() const noexcept { return norm_bound_; }

 private:
  std::size_t n_;
  double beta_;
  std::vector<NeighborPair> pairs_;
  Eigen::MatrixXd dense_;
  double norm_bound_ = 0.0;
};

Hamiltonian build_hamiltonian(const Lattice& lattice, double beta = 0.0);

struct HermiticityReport {
  bool passed = true;
  double max_asymmetry = 0.0;
};

HermiticityReport hermiticity_check(const Eigen::MatrixXd& entries);
HermiticityReport hermiticity_check(const Hamiltonian& h);

/// Writes nonzero entries as "row,col,value" triplets with a header line.
void write_matrix_csv(std::ostream& out, const Hamiltonian& h);

}  // namespace qwalk
