#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qwalk/classical.hpp"
#include "qwalk/error.hpp"
#include "qwalk/observables.hpp"

using namespace qwalk;

namespace {

LatticeSpec grid_spec(std::size_t rows, std::size_t cols) {
  LatticeSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  return spec;
}

}  // namespace

TEST_CASE("build_rate_matrix") {
  SUBCASE("two sites") {
    const Lattice l(grid_spec(1, 2));
    const RateMatrix r = build_rate_matrix(l);
    const double c = neighbor_pairs(l)[0].coupling;
    CHECK(r.entries(0, 0) == -c);
    CHECK(r.entries(0, 1) == c);
    CHECK(r.entries(1, 0) == c);
    CHECK(r.entries(1, 1) == -c);
  }
  SUBCASE("single site") {
    CHECK(build_rate_matrix(Lattice(grid_spec(1, 1))).entries(0, 0) == 0.0);
  }
  SUBCASE("columns sum to zero") {
    const RateMatrix r = build_rate_matrix(Lattice(grid_spec(6, 7)));
    CHECK(r.entries.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
    CHECK((r.entries - r.entries.transpose()).norm() == 0.0);
  }
}

TEST_CASE("evolve_classical") {
  SUBCASE("z = 0 returns p0") {
    const RateMatrix r = build_rate_matrix(Lattice(grid_spec(3, 3)));
    std::vector<double> p0(9, 0.0);
    p0[4] = 1.0;
    const auto p = evolve_classical(r, p0, 0.0);
    for (std::size_t k = 0; k < 9; ++k) CHECK(std::abs(p[k] - p0[k]) < 1e-14);
  }
  SUBCASE("two sites relax as (1 +- e^{-2 gamma z}) / 2") {
    const double gamma = 0.7;
    const std::vector<NeighborPair> pairs = {{0, 1, gamma}};
    const RateMatrix r = build_rate_matrix(2, pairs);
    const std::vector<double> p0 = {1.0, 0.0};
    for (double z : {0.1, 1.0, 3.0}) {
      const auto p = evolve_classical(r, p0, z);
      const double e = std::exp(-2.0 * gamma * z);
      CHECK(p[0] == doctest::Approx((1.0 + e) / 2.0).epsilon(1e-12));
      CHECK(p[1] == doctest::Approx((1.0 - e) / 2.0).epsilon(1e-12));
    }
  }
  SUBCASE("connected lattice relaxes to uniform") {
    const RateMatrix r = build_rate_matrix(Lattice(grid_spec(4, 5)));
    std::vector<double> p0(20, 0.0);
    p0[0] = 1.0;
    const auto p = evolve_classical(r, p0, 2000.0);
    for (double x : p) CHECK(std::abs(x - 0.05) < 1e-6);
  }
  SUBCASE("input validation") {
    const RateMatrix r = build_rate_matrix(Lattice(grid_spec(1, 3)));
    CHECK_THROWS_AS(evolve_classical(r, std::vector<double>{1.0, 0.0}, 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(evolve_classical(r, std::vector<double>{0.5, 0.0, 0.0}, 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(evolve_classical(r, std::vector<double>{1.0, 0.0, 0.0}, -1.0),
                    InvalidArgument);
  }
}

TEST_CASE("classical trace conserves probability and P0 decays") {
  const Lattice l(grid_spec(9, 9));
  const RateMatrix r = build_rate_matrix(l);
  std::vector<double> p0(l.size(), 0.0);
  p0[l.index(l.center())] = 1.0;
  std::vector<double> zs;
  for (int k = 0; k <= 60; ++k) zs.push_back(0.25 * k);
  const EvolutionTrace t = classical_trace(r, p0, zs, l.shape(), 2);
  const ObservableSeries ret = return_probability(t, l.center());
  for (std::size_t k = 0; k < zs.size(); ++k) {
    CHECK(std::abs(t.grids[k].total() - 1.0) < 1e-10);
    for (double v : t.grids[k].values()) CHECK(v >= 0.0);
    if (k > 0) CHECK(ret.values[k] < ret.values[k - 1]);
  }
}

TEST_CASE("gaussian_reference") {
  const GridShape shape{49, 49};
  const ProbabilityGrid g = gaussian_reference(shape, 1.5, {24, 24});
  CHECK(g.total() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*std::max_element(g.values().begin(), g.values().end()) ==
        g.at(24, 24));
  const Projections p = projections(g);
  const auto peak = std::max_element(p.x_profile.begin(), p.x_profile.end());
  CHECK(peak - p.x_profile.begin() == 24);
  // Single peak: rises to the centre and falls after it.
  for (std::size_t c = 1; c <= 24; ++c) CHECK(p.x_profile[c] > p.x_profile[c - 1]);
  for (std::size_t c = 25; c < 49; ++c) CHECK(p.x_profile[c] < p.x_profile[c - 1]);
  CHECK(variance(g, {24, 24}) == doctest::Approx(2.0 * 1.5 * 1.5).epsilon(1e-6));
  CHECK_THROWS_AS(gaussian_reference(shape, 0.0, {0, 0}), InvalidArgument);
}
