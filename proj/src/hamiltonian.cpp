#include "qwalk/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qwalk/error.hpp"
#include "qwalk/numeric_format.hpp"

namespace qwalk {

Hamiltonian::Hamiltonian(std::size_t n, double beta,
                         std::vector<NeighborPair> pairs)
    : n_(n), beta_(beta), pairs_(std::move(pairs)) {
  if (n_ == 0) throw InvalidArgument("Hamiltonian must have at least one site");
  if (!std::isfinite(beta_)) {
    throw InvalidArgument("propagation constant must be finite");
  }
  dense_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_),
                                 static_cast<Eigen::Index>(n_));
  dense_.diagonal().setConstant(beta_);
  Eigen::VectorXd row_sums =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_), std::abs(beta_));
  for (const NeighborPair& p : pairs_) {
    if (p.i >= n_ || p.j >= n_ || p.i == p.j) {
      throw InvalidArgument("neighbor pair refers to an invalid site");
    }
    if (!std::isfinite(p.coupling)) {
      throw InvalidArgument("coupling must be finite");
    }
    const auto i = static_cast<Eigen::Index>(p.i);
    const auto j = static_cast<Eigen::Index>(p.j);
    dense_(i, j) += p.coupling;
    dense_(j, i) += p.coupling;
    row_sums[i] += std::abs(p.coupling);
    row_sums[j] += std::abs(p.coupling);
  }
  norm_bound_ = row_sums.maxCoeff();
}

Eigen::VectorXcd Hamiltonian::apply(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) {
    throw InvalidArgument("state dimension does not match Hamiltonian");
  }
  Eigen::VectorXcd y = beta_ * x;
  for (const NeighborPair& p : pairs_) {
    const auto i = static_cast<Eigen::Index>(p.i);
    const auto j = static_cast<Eigen::Index>(p.j);
    y[i] += p.coupling * x[j];
    y[j] += p.coupling * x[i];
  }
  return y;
}

Hamiltonian Hamiltonian::scaled(double factor) const {
  std::vector<NeighborPair> pairs = pairs_;
  for (NeighborPair& p : pairs) p.coupling *= factor;
  return Hamiltonian(n_, beta_ * factor, std::move(pairs));
}

Hamiltonian build_hamiltonian(const Lattice& lattice, double beta) {
  return Hamiltonian(lattice.size(), beta, neighbor_pairs(lattice));
}

HermiticityReport hermiticity_check(const Eigen::MatrixXd& entries) {
  if (entries.rows() != entries.cols()) {
    return {false, std::numeric_limits<double>::infinity()};
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < entries.cols(); ++j) {
      worst = std::max(worst, std::abs(entries(i, j) - entries(j, i)));
    }
  }
  return {worst == 0.0, worst};
}

HermiticityReport hermiticity_check(const Hamiltonian& h) {
  return hermiticity_check(h.dense());
}

void write_matrix_csv(std::ostream& out, const Hamiltonian& h) {
  out << "row,col,value\n";
  const Eigen::MatrixXd& m = h.dense();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) == 0.0) continue;
      out << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
    }
  }
}

}  // namespace qwalk
