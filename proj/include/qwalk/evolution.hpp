#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qwalk/hamiltonian.hpp"
#include "qwalk/lattice.hpp"

namespace qwalk {

/// Complex amplitudes of a single excitation over the sites.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Eigen::VectorXcd amplitudes);

  /// All amplitude on site `index`.
  static StateVector basis(std::size_t n, std::size_t index);

  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(amplitudes_.size());
  }
  double norm() const { return amplitudes_.norm(); }

 private:
  Eigen::VectorXcd amplitudes_;
};

/// Site probabilities laid out on a rows x cols grid (row-major).
class ProbabilityGrid {
 public:
  ProbabilityGrid() = default;
  ProbabilityGrid(GridShape shape, std::vector<double> values);

  GridShape shape() const noexcept { return shape_; }
  std::size_t rows() const noexcept { return shape_.rows; }
  std::size_t cols() const noexcept { return shape_.cols; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t index) const { return values_[index]; }
  double at(std::size_t row, std::size_t col) const;
  double at(Site s) const { return at(s.row, s.col); }
  const std::vector<double>& values() const noexcept { return values_; }

  double total() const noexcept;

 private:
  GridShape shape_;
  std::vector<double> values_;
};

struct EvolutionTrace {
  std::vector<double> z_values;
  std::vector<ProbabilityGrid> grids;

  void validate() const;
};

enum class Backend { spectral, krylov };

std::string_view to_string(Backend backend) noexcept;
Backend parse_backend(std::string_view name);

struct KrylovOptions {
  int max_subspace = 30;
  double tol = 1e-10;
  /// Budget of Krylov subspace constructions for one evolve call.
  std::size_t max_steps = 100000;
};

/// Reusable eigendecomposition H = V diag(lambda) V^T.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const Hamiltonian& h);

  StateVector evolve(const StateVector& psi0, double z) const;
  /// One state per z, computed together.
  std::vector<StateVector> evolve_many(const StateVector& psi0,
                                       std::span<const double> z_values) const;

  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

StateVector evolve_spectral(const Hamiltonian& h, const StateVector& psi0,
                            double z);

/// Lanczos approximation of exp(-iHz) psi0, split into sub-steps whose
/// a-posteriori error estimates sum to at most `options.tol`.
StateVector evolve_krylov(const Hamiltonian& h, const StateVector& psi0,
                          double z, const KrylovOptions& options = {});

ProbabilityGrid probabilities(const StateVector& psi, GridShape shape);
/// Probabilities on a single-row grid.
ProbabilityGrid probabilities(const StateVector& psi);

struct TraceOptions {
  Backend backend = Backend::spectral;
  KrylovOptions krylov{};
  unsigned threads = 1;
};

/// Evolved states at each z. The spectral backend decomposes H once; the
/// Krylov backend advances from one sample to the next.
std::vector<StateVector> evolve_states(const Hamiltonian& h,
                                       const StateVector& psi0,
                                       std::span<const double> z_values,
                                       const TraceOptions& options = {});

EvolutionTrace evolve_trace(const Hamiltonian& h, const StateVector& psi0,
                            std::span<const double> z_values, GridShape shape,
                            const TraceOptions& options = {});

/// Throws InvalidArgument unless the values are finite, non-negative and
/// strictly increasing.
void validate_z_values(std::span<const double> z_values);

}  // namespace qwalk
