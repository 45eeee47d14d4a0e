#include "qwalk/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "parallel.hpp"
#include "symmetric_eigen.hpp"
#include "qwalk/error.hpp"

namespace qwalk {

namespace {

using cplx = std::complex<double>;

void check_state(const Hamiltonian& h, const StateVector& psi0, double z) {
  if (psi0.size() != h.size()) {
    throw InvalidArgument("initial state has " + std::to_string(psi0.size()) +
                          " amplitudes but the Hamiltonian has " +
                          std::to_string(h.size()) + " sites");
  }
  if (!std::isfinite(z) || z < 0.0) {
    throw InvalidArgument("propagation length must be finite and >= 0");
  }
}

// Lanczos tridiagonalization of H started from `start`, with full
// reorthogonalization against the stored basis.
struct LanczosBasis {
  Eigen::MatrixXcd basis;     // n x k, orthonormal columns
  Eigen::VectorXd diagonal;   // k
  Eigen::VectorXd offdiag;    // k - 1
  double residual = 0.0;      // coupling to the (k+1)-th vector
  bool invariant = false;     // happy breakdown: subspace is H-invariant
};

LanczosBasis lanczos(const Hamiltonian& h, const Eigen::VectorXcd& start,
                     int max_dim) {
  const auto n = static_cast<Eigen::Index>(h.size());
  const Eigen::Index m = std::min<Eigen::Index>(max_dim, n);
  const double breakdown = 1e-13 * std::max(h.norm_bound(), 1e-300);

  LanczosBasis out;
  out.basis.resize(n, m);
  out.diagonal.resize(m);
  out.offdiag.resize(std::max<Eigen::Index>(m - 1, 0));
  out.basis.col(0) = start / start.norm();

  Eigen::Index k = 0;
  for (; k < m; ++k) {
    Eigen::VectorXcd w = h.apply(out.basis.col(k));
    out.diagonal[k] = out.basis.col(k).dot(w).real();
    // Two passes of classical Gram-Schmidt keep the basis orthonormal to
    // working precision.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd coeffs = out.basis.leftCols(k + 1).adjoint() * w;
      w.noalias() -= out.basis.leftCols(k + 1) * coeffs;
    }
    const double beta = w.norm();
    if (beta <= breakdown) {
      out.invariant = true;
      out.residual = 0.0;
      ++k;
      break;
    }
    if (k + 1 == m) {
      out.residual = beta;
      ++k;
      break;
    }
    out.offdiag[k] = beta;
    out.basis.col(k + 1) = w / beta;
  }
  out.basis.conservativeResize(n, k);
  out.diagonal.conservativeResize(k);
  out.offdiag.conservativeResize(std::max<Eigen::Index>(k - 1, 0));
  return out;
}

}  // namespace

StateVector::StateVector(Eigen::VectorXcd amplitudes)
    : amplitudes_(std::move(amplitudes)) {}

StateVector StateVector::basis(std::size_t n, std::size_t index) {
  if (index >= n) throw InvalidArgument("basis index out of range");
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
  amps[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVector(std::move(amps));
}

ProbabilityGrid::ProbabilityGrid(GridShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape_.size() == 0 || values_.size() != shape_.size()) {
    throw InvalidArgument("probability grid has " +
                          std::to_string(values_.size()) +
                          " values for a " + std::to_string(shape_.rows) +
                          "x" + std::to_string(shape_.cols) + " shape");
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("probabilities must be finite and non-negative");
    }
  }
}

double ProbabilityGrid::at(std::size_t row, std::size_t col) const {
  if (row >= shape_.rows || col >= shape_.cols) {
    throw InvalidArgument("grid position out of range");
  }
  return values_[row * shape_.cols + col];
}

double ProbabilityGrid::total() const noexcept {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum;
}

void EvolutionTrace::validate() const {
  if (z_values.size() != grids.size()) {
    throw InvalidArgument("trace has mismatched z and grid counts");
  }
  validate_z_values(z_values);
  for (const ProbabilityGrid& g : grids) {
    if (g.shape() != grids.front().shape()) {
      throw InvalidArgument("trace grids differ in shape");
    }
  }
}

std::string_view to_string(Backend backend) noexcept {
  return backend == Backend::spectral ? "spectral" : "krylov";
}

Backend parse_backend(std::string_view name) {
  if (name == "spectral") return Backend::spectral;
  if (name == "krylov") return Backend::krylov;
  throw InvalidArgument("unknown backend '" + std::string(name) +
                        "' (expected spectral or krylov)");
}

SpectralPropagator::SpectralPropagator(const Hamiltonian& h) {
  detail::SymmetricEigen eig =
      detail::symmetric_eigen(h.dense(), "spectral decomposition");
  eigenvalues_ = std::move(eig.values);
  eigenvectors_ = std::move(eig.vectors);
}

StateVector SpectralPropagator::evolve(const StateVector& psi0,
                                       double z) const {
  const double zs[] = {z};
  return evolve_many(psi0, zs).front();
}

std::vector<StateVector> SpectralPropagator::evolve_many(
    const StateVector& psi0, std::span<const double> z_values) const {
  const auto n = eigenvalues_.size();
  if (psi0.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("initial state dimension does not match Hamiltonian");
  }
  for (double z : z_values) {
    if (!std::isfinite(z) || z < 0.0) {
      throw InvalidArgument("propagation length must be finite and >= 0");
    }
  }
  // V is real, so project real and imaginary parts separately and advance
  // all z at once as a matrix product.
  const Eigen::VectorXd cre = eigenvectors_.transpose() * psi0.amplitudes().real();
  const Eigen::VectorXd cim = eigenvectors_.transpose() * psi0.amplitudes().imag();
  const auto count = static_cast<Eigen::Index>(z_values.size());
  Eigen::MatrixXd re(n, count);
  Eigen::MatrixXd im(n, count);
  for (Eigen::Index col = 0; col < count; ++col) {
    const double z = z_values[static_cast<std::size_t>(col)];
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx c = std::polar(1.0, -eigenvalues_[k] * z) * cplx(cre[k], cim[k]);
      re(k, col) = c.real();
      im(k, col) = c.imag();
    }
  }
  const Eigen::MatrixXd out_re = eigenvectors_ * re;
  const Eigen::MatrixXd out_im = eigenvectors_ * im;
  std::vector<StateVector> out;
  out.reserve(z_values.size());
  for (Eigen::Index col = 0; col < count; ++col) {
    Eigen::VectorXcd amps(n);
    amps.real() = out_re.col(col);
    amps.imag() = out_im.col(col);
    out.emplace_back(std::move(amps));
  }
  return out;
}

StateVector evolve_spectral(const Hamiltonian& h, const StateVector& psi0,
                            double z) {
  check_state(h, psi0, z);
  return SpectralPropagator(h).evolve(psi0, z);
}

StateVector evolve_krylov(const Hamiltonian& h, const StateVector& psi0,
                          double z, const KrylovOptions& options) {
  check_state(h, psi0, z);
  if (options.max_subspace < 2) {
    throw InvalidArgument("Krylov subspace dimension must be at least 2");
  }
  if (!(options.tol > 0.0)) {
    throw InvalidArgument("Krylov tolerance must be positive");
  }
  if (z == 0.0 || psi0.norm() == 0.0) return psi0;

  Eigen::VectorXcd v = psi0.amplitudes();
  double remaining = z;
  // Lanczos converges quickly once ||H|| * step is below the subspace size.
  double step = std::min(
      z, 0.5 * options.max_subspace / std::max(h.norm_bound(), 1e-300));
  std::size_t constructions = 0;

  while (remaining > 0.0) {
    if (++constructions > options.max_steps) {
      throw ConvergenceError("krylov evolution",
                             "step budget of " +
                                 std::to_string(options.max_steps) +
                                 " subspaces exhausted");
    }
    const double vnorm = v.norm();
    const LanczosBasis lb = lanczos(h, v, options.max_subspace);
    const auto k = lb.diagonal.size();

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    t.diagonal() = lb.diagonal;
    if (k > 1) {
      t.diagonal(1) = lb.offdiag;
      t.diagonal(-1) = lb.offdiag;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
    if (small.info() != Eigen::Success) {
      throw DecompositionError("krylov evolution",
                               "tridiagonal eigensolver did not converge");
    }
    const Eigen::VectorXd& theta = small.eigenvalues();
    const Eigen::MatrixXd& q = small.eigenvectors();

    // Shrink the step on this basis until the estimate meets the budget.
    step = std::min(step, remaining);
    Eigen::VectorXcd y(k);
    double estimate = 0.0;
    for (;;) {
      Eigen::VectorXcd phased(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        phased[i] = std::polar(vnorm * q(0, i), -theta[i] * step);
      }
      y = q * phased;
      estimate = lb.invariant ? 0.0 : lb.residual * std::abs(y[k - 1]);
      // Below a few ulps of the state norm the estimate is rounding noise.
      const double floor = 8.0 * std::numeric_limits<double>::epsilon() * vnorm;
      if (estimate <= std::max(options.tol * step / z, floor)) break;
      step *= 0.5;
      if (step <= z * 1e-15) {
        throw ConvergenceError("krylov evolution",
                               "step size underflow while meeting tolerance");
      }
    }
    v = lb.basis * y;
    remaining -= step;
    if (remaining <= z * 1e-15) remaining = 0.0;
    if (lb.invariant) {
      step = remaining;
    } else if (estimate < 0.01 * options.tol * step / z) {
      step *= 2.0;
    }
  }
  return StateVector(std::move(v));
}

ProbabilityGrid probabilities(const StateVector& psi, GridShape shape) {
  std::vector<double> values(psi.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] = std::norm(psi.amplitudes()[static_cast<Eigen::Index>(j)]);
  }
  return ProbabilityGrid(shape, std::move(values));
}

ProbabilityGrid probabilities(const StateVector& psi) {
  return probabilities(psi, GridShape{1, psi.size()});
}

void validate_z_values(std::span<const double> z_values) {
  for (std::size_t k = 0; k < z_values.size(); ++k) {
    const double z = z_values[k];
    if (!std::isfinite(z) || z < 0.0) {
      throw InvalidArgument("propagation lengths must be finite and >= 0");
    }
    if (k > 0 && !(z > z_values[k - 1])) {
      throw InvalidArgument("propagation lengths must be strictly increasing");
    }
  }
}

std::vector<StateVector> evolve_states(const Hamiltonian& h,
                                       const StateVector& psi0,
                                       std::span<const double> z_values,
                                       const TraceOptions& options) {
  validate_z_values(z_values);
  check_state(h, psi0, 0.0);
  std::vector<StateVector> states(z_values.size());
  if (z_values.empty()) return states;

  if (options.backend == Backend::spectral) {
    const SpectralPropagator propagator(h);
    constexpr std::size_t kBlock = 32;
    const std::size_t blocks = (z_values.size() + kBlock - 1) / kBlock;
    detail::parallel_for(blocks, options.threads, [&](std::size_t b) {
      const std::size_t first = b * kBlock;
      const std::size_t len = std::min(kBlock, z_values.size() - first);
      auto block = propagator.evolve_many(psi0, z_values.subspan(first, len));
      std::move(block.begin(), block.end(), states.begin() + first);
    });
    return states;
  }

  StateVector current = psi0;
  double z_prev = 0.0;
  for (std::size_t k = 0; k < z_values.size(); ++k) {
    current = evolve_krylov(h, current, z_values[k] - z_prev, options.krylov);
    z_prev = z_values[k];
    states[k] = current;
  }
  return states;
}

EvolutionTrace evolve_trace(const Hamiltonian& h, const StateVector& psi0,
                            std::span<const double> z_values, GridShape shape,
                            const TraceOptions& options) {
  if (shape.size() != h.size()) {
    throw InvalidArgument("grid shape does not match Hamiltonian size");
  }
  const std::vector<StateVector> states =
      evolve_states(h, psi0, z_values, options);
  EvolutionTrace trace;
  trace.z_values.assign(z_values.begin(), z_values.end());
  trace.grids.reserve(states.size());
  for (const StateVector& s : states) {
    trace.grids.push_back(probabilities(s, shape));
  }
  return trace;
}

}  // namespace qwalk
