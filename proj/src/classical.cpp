#include "qwalk/classical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"
#include "symmetric_eigen.hpp"
#include "qwalk/error.hpp"

namespace qwalk {

RateMatrix build_rate_matrix(std::size_t n,
                             std::span<const NeighborPair> pairs) {
  if (n == 0) throw InvalidArgument("rate matrix needs at least one site");
  const auto size = static_cast<Eigen::Index>(n);
  RateMatrix rates{Eigen::MatrixXd::Zero(size, size)};
  for (const NeighborPair& p : pairs) {
    if (p.i >= n || p.j >= n || p.i == p.j) {
      throw InvalidArgument("neighbor pair refers to an invalid site");
    }
    if (!(p.coupling >= 0.0)) {
      throw InvalidArgument("hopping rates must be non-negative");
    }
    const auto i = static_cast<Eigen::Index>(p.i);
    const auto j = static_cast<Eigen::Index>(p.j);
    rates.entries(i, j) += p.coupling;
    rates.entries(j, i) += p.coupling;
  }
  for (Eigen::Index c = 0; c < size; ++c) {
    double outflow = 0.0;
    for (Eigen::Index r = 0; r < size; ++r) {
      if (r != c) outflow += rates.entries(r, c);
    }
    rates.entries(c, c) = -outflow;
  }
  return rates;
}

RateMatrix build_rate_matrix(const Lattice& lattice) {
  const std::vector<NeighborPair> pairs = neighbor_pairs(lattice);
  return build_rate_matrix(lattice.size(), pairs);
}

ClassicalPropagator::ClassicalPropagator(const RateMatrix& rates) {
  if (rates.entries.rows() == 0 ||
      rates.entries.rows() != rates.entries.cols()) {
    throw InvalidArgument("rate matrix must be square and non-empty");
  }
  detail::SymmetricEigen eig =
      detail::symmetric_eigen(rates.entries, "classical decomposition");
  eigenvalues_ = std::move(eig.values);
  eigenvectors_ = std::move(eig.vectors);
}

std::vector<double> ClassicalPropagator::evolve(std::span<const double> p0,
                                                double z) const {
  const auto n = eigenvalues_.size();
  if (static_cast<Eigen::Index>(p0.size()) != n) {
    throw InvalidArgument("initial distribution has " +
                          std::to_string(p0.size()) + " entries, expected " +
                          std::to_string(n));
  }
  if (!std::isfinite(z) || z < 0.0) {
    throw InvalidArgument("propagation length must be finite and >= 0");
  }
  double mass = 0.0;
  for (double p : p0) {
    if (!(p >= 0.0)) throw InvalidArgument("probabilities must be >= 0");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-10) {
    throw InvalidArgument("initial distribution must sum to 1");
  }
  const Eigen::Map<const Eigen::VectorXd> start(p0.data(), n);
  Eigen::VectorXd coeffs = eigenvectors_.transpose() * start;
  for (Eigen::Index k = 0; k < n; ++k) {
    coeffs[k] *= std::exp(eigenvalues_[k] * z);
  }
  const Eigen::VectorXd p = eigenvectors_ * coeffs;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    // Round-off can leave tiny negatives where the true value is ~0.
    out[static_cast<std::size_t>(k)] = std::max(p[k], 0.0);
  }
  return out;
}

std::vector<double> evolve_classical(const RateMatrix& rates,
                                     std::span<const double> p0, double z) {
  return ClassicalPropagator(rates).evolve(p0, z);
}

EvolutionTrace classical_trace(const RateMatrix& rates,
                               std::span<const double> p0,
                               std::span<const double> z_values,
                               GridShape shape, unsigned threads) {
  validate_z_values(z_values);
  if (shape.size() != rates.size()) {
    throw InvalidArgument("grid shape does not match rate matrix size");
  }
  const ClassicalPropagator propagator(rates);
  EvolutionTrace trace;
  trace.z_values.assign(z_values.begin(), z_values.end());
  trace.grids.resize(z_values.size());
  detail::parallel_for(z_values.size(), threads, [&](std::size_t k) {
    trace.grids[k] = ProbabilityGrid(shape, propagator.evolve(p0, z_values[k]));
  });
  return trace;
}

ProbabilityGrid gaussian_reference(GridShape shape, double sigma_units,
                                   Site origin) {
  if (!(sigma_units > 0.0) || !std::isfinite(sigma_units)) {
    throw InvalidArgument("Gaussian width must be positive");
  }
  if (origin.row >= shape.rows || origin.col >= shape.cols) {
    throw InvalidArgument("Gaussian centre lies outside the grid");
  }
  std::vector<double> values(shape.size());
  double total = 0.0;
  for (std::size_t r = 0; r < shape.rows; ++r) {
    const double dy = static_cast<double>(r) - static_cast<double>(origin.row);
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const double dx =
          static_cast<double>(c) - static_cast<double>(origin.col);
      const double v =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_units * sigma_units));
      values[r * shape.cols + c] = v;
      total += v;
    }
  }
  for (double& v : values) v /= total;
  return ProbabilityGrid(shape, std::move(values));
}

}  // namespace qwalk
