#pragma once

#include <compare>
#include <cstddef>
#include <vector>

namespace qwalk {

/// Exponential coupling-versus-spacing fit, one branch per direction.
///
/// Amplitudes are in 1/mm and decay rates in 1/um, so
/// C(d) = amp * exp(-kappa * d) is a coupling in 1/mm for d in um.
struct CouplingModel {
  double amp_h = 0.0;
  double kappa_h = 0.0;
  double amp_v = 0.0;
  double kappa_v = 0.0;

  /// Model whose horizontal branch gives `c_nn` at `dh_um` and whose
  /// vertical branch gives `c_nn` at `dv_um`, both decaying at `kappa`.
  static CouplingModel equal_nearest(double c_nn, double kappa, double dh_um,
                                     double dv_um);

  void validate() const;
};

/// Nearest-neighbor coupling of the default model, in 1/mm.
inline constexpr double kDefaultNearestCoupling = 0.5;
/// Decay rate of the default model, in 1/um.
inline constexpr double kDefaultDecayRate = 0.2;

CouplingModel default_coupling_model();

struct LatticeSpec {
  std::size_t rows = 49;
  std::size_t cols = 49;
  double dv_um = 15.0;
  double dh_um = 13.5;
  CouplingModel coupling = default_coupling_model();
  double cutoff_um = 31.0;

  void validate() const;
};

struct Site {
  std::size_t row = 0;
  std::size_t col = 0;

  friend auto operator<=>(const Site&, const Site&) = default;
};

struct Position {
  double x_um = 0.0;
  double y_um = 0.0;
};

struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Rectangular waveguide grid. Site (r, c) sits at (c * dh, r * dv) and has
/// flat index r * cols + c.
class Lattice {
 public:
  explicit Lattice(LatticeSpec spec);

  const LatticeSpec& spec() const noexcept { return spec_; }
  GridShape shape() const noexcept { return {spec_.rows, spec_.cols}; }
  std::size_t size() const noexcept { return spec_.rows * spec_.cols; }
  std::size_t rows() const noexcept { return spec_.rows; }
  std::size_t cols() const noexcept { return spec_.cols; }

  std::size_t index(Site s) const;
  Site site(std::size_t index) const;
  Position position(std::size_t index) const;
  Position position(Site s) const { return position(index(s)); }
  bool contains(Site s) const noexcept {
    return s.row < spec_.rows && s.col < spec_.cols;
  }

  /// The waveguide at (rows / 2, cols / 2).
  Site center() const noexcept { return {spec_.rows / 2, spec_.cols / 2}; }

  /// Physical extent (width along x, height along y) in um, measured
  /// between outermost site centers.
  Position extent() const noexcept;

 private:
  LatticeSpec spec_;
};

Lattice build_lattice(const LatticeSpec& spec);

/// Coupling between two waveguides separated by (dx_um, dy_um).
///
/// Axis-aligned pairs use their own branch of the model; inclined pairs take
/// the mean of both branches evaluated at the Euclidean spacing.
double coupling_coefficient(const CouplingModel& model, double dx_um,
                            double dy_um);

struct NeighborPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double coupling = 0.0;
};

/// Every unordered pair of sites with spacing <= cutoff_um, stored once with
/// i < j and sorted by (i, j).
std::vector<NeighborPair> neighbor_pairs(const Lattice& lattice);

}  // namespace qwalk
