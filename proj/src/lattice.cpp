#include "qwalk/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qwalk/error.hpp"

namespace qwalk {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

CouplingModel CouplingModel::equal_nearest(double c_nn, double kappa,
                                           double dh_um, double dv_um) {
  return {c_nn * std::exp(kappa * dh_um), kappa, c_nn * std::exp(kappa * dv_um),
          kappa};
}

void CouplingModel::validate() const {
  if (!positive_finite(amp_h) || !positive_finite(kappa_h) ||
      !positive_finite(amp_v) || !positive_finite(kappa_v)) {
    throw InvalidArgument(
        "coupling model parameters must be finite and strictly positive");
  }
}

CouplingModel default_coupling_model() {
  return CouplingModel::equal_nearest(kDefaultNearestCoupling,
                                      kDefaultDecayRate, 13.5, 15.0);
}

void LatticeSpec::validate() const {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("lattice must have at least one row and one column");
  }
  if (!positive_finite(dv_um) || !positive_finite(dh_um)) {
    throw InvalidArgument("lattice spacings must be finite and positive");
  }
  if (!positive_finite(cutoff_um)) {
    throw InvalidArgument("coupling cutoff must be finite and positive");
  }
  coupling.validate();
}

Lattice::Lattice(LatticeSpec spec) : spec_(spec) { spec_.validate(); }

std::size_t Lattice::index(Site s) const {
  if (!contains(s)) {
    throw InvalidArgument("site (" + std::to_string(s.row) + ", " +
                          std::to_string(s.col) + ") lies outside the lattice");
  }
  return s.row * spec_.cols + s.col;
}

Site Lattice::site(std::size_t index) const {
  if (index >= size()) {
    throw InvalidArgument("site index " + std::to_string(index) +
                          " out of range");
  }
  return {index / spec_.cols, index % spec_.cols};
}

Position Lattice::position(std::size_t index) const {
  const Site s = site(index);
  return {static_cast<double>(s.col) * spec_.dh_um,
          static_cast<double>(s.row) * spec_.dv_um};
}

Position Lattice::extent() const noexcept {
  return {static_cast<double>(spec_.cols - 1) * spec_.dh_um,
          static_cast<double>(spec_.rows - 1) * spec_.dv_um};
}

Lattice build_lattice(const LatticeSpec& spec) { return Lattice(spec); }

double coupling_coefficient(const CouplingModel& model, double dx_um,
                            double dy_um) {
  if (!(dx_um >= 0.0) || !(dy_um >= 0.0) || !std::isfinite(dx_um) ||
      !std::isfinite(dy_um)) {
    throw InvalidArgument("pair offsets must be finite and non-negative");
  }
  if (dx_um == 0.0 && dy_um == 0.0) {
    throw InvalidArgument("coincident sites have no coupling coefficient");
  }
  const double d = std::hypot(dx_um, dy_um);
  const double horizontal = model.amp_h * std::exp(-model.kappa_h * d);
  const double vertical = model.amp_v * std::exp(-model.kappa_v * d);
  if (dy_um == 0.0) return horizontal;
  if (dx_um == 0.0) return vertical;
  return 0.5 * (horizontal + vertical);
}

std::vector<NeighborPair> neighbor_pairs(const Lattice& lattice) {
  const LatticeSpec& spec = lattice.spec();
  const auto max_dc = static_cast<std::size_t>(spec.cutoff_um / spec.dh_um);
  const auto max_dr = static_cast<std::size_t>(spec.cutoff_um / spec.dv_um);

  // Couplings depend only on the offset, so evaluate each offset once.
  struct Offset {
    std::size_t dr;
    std::ptrdiff_t dc;
    double coupling;
  };
  std::vector<Offset> offsets;
  for (std::size_t dr = 0; dr <= max_dr; ++dr) {
    const auto reach = static_cast<std::ptrdiff_t>(max_dc);
    for (std::ptrdiff_t dc = -reach; dc <= reach; ++dc) {
      // Forward half-plane only: each unordered pair is visited once.
      if (dr == 0 && dc <= 0) continue;
      const double dx = static_cast<double>(dc < 0 ? -dc : dc) * spec.dh_um;
      const double dy = static_cast<double>(dr) * spec.dv_um;
      if (std::hypot(dx, dy) > spec.cutoff_um) continue;
      offsets.push_back({dr, dc, coupling_coefficient(spec.coupling, dx, dy)});
    }
  }

  std::vector<NeighborPair> pairs;
  const auto cols = static_cast<std::ptrdiff_t>(spec.cols);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      const std::size_t i = r * spec.cols + static_cast<std::size_t>(c);
      for (const Offset& o : offsets) {
        const std::size_t r2 = r + o.dr;
        const std::ptrdiff_t c2 = c + o.dc;
        if (r2 >= spec.rows || c2 < 0 || c2 >= cols) continue;
        const std::size_t j = r2 * spec.cols + static_cast<std::size_t>(c2);
        pairs.push_back({i, j, o.coupling});
      }
    }
  }
  // Offsets with dr > 0 and dc < 0 still give j > i, but not in j order.
  std::sort(pairs.begin(), pairs.end(),
            [](const NeighborPair& a, const NeighborPair& b) {
              return a.i != b.i ? a.i < b.i : a.j < b.j;
            });
  return pairs;
}

}  // namespace qwalk
