#include <doctest.h>

#include <cmath>
#include <random>

#include "qwalk/error.hpp"
#include "qwalk/evolution.hpp"

using namespace qwalk;

namespace {

using cplx = std::complex<double>;

Hamiltonian two_site(double c) { return Hamiltonian(2, 0.0, {{0, 1, c}}); }

// Uniform nearest-neighbour chain with coupling c.
Hamiltonian uniform_chain(std::size_t n, double c) {
  std::vector<NeighborPair> pairs;
  for (std::size_t j = 0; j + 1 < n; ++j) pairs.push_back({j, j + 1, c});
  return Hamiltonian(n, 0.0, std::move(pairs));
}

Lattice square(std::size_t n) {
  LatticeSpec spec;
  spec.rows = n;
  spec.cols = n;
  return Lattice(spec);
}

double max_diff(const StateVector& a, const StateVector& b) {
  return (a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff();
}

StateVector random_state(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return StateVector(v / v.norm());
}

}  // namespace

TEST_CASE("probabilities") {
  CHECK(probabilities(StateVector::basis(3, 0)).values() ==
        std::vector<double>{1.0, 0.0, 0.0});
  Eigen::VectorXcd v(2);
  v << cplx(0.5, 0.5), cplx(0.5, -0.5);
  const ProbabilityGrid g = probabilities(StateVector(v));
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.5));
  CHECK(probabilities(random_state(50, 3)).total() == doctest::Approx(1.0));
}

TEST_CASE("spectral backend") {
  SUBCASE("z = 0 is the identity") {
    const Lattice l = square(4);
    const StateVector psi0 = random_state(l.size(), 1);
    CHECK(max_diff(evolve_spectral(build_hamiltonian(l), psi0, 0.0), psi0) <
          1e-13);
  }
  SUBCASE("two sites: (cos Cz, -i sin Cz)") {
    const double c = 0.8;
    for (double z : {0.0, 0.4, 1.3, 5.0, 12.5}) {
      const StateVector psi =
          evolve_spectral(two_site(c), StateVector::basis(2, 0), z);
      CHECK(std::abs(psi.amplitudes()[0] - cplx(std::cos(c * z), 0.0)) < 1e-12);
      CHECK(std::abs(psi.amplitudes()[1] - cplx(0.0, -std::sin(c * z))) < 1e-12);
    }
  }
  SUBCASE("101-site chain follows J_j(2Cz)^2 away from the edges") {
    const double c = 0.5;
    const Hamiltonian h = uniform_chain(101, c);
    const StateVector psi0 = StateVector::basis(101, 50);
    for (double z : {1.0, 4.0, 10.0}) {  // Cz <= 5
      const ProbabilityGrid p = probabilities(evolve_spectral(h, psi0, z));
      double worst = 0.0;
      for (int j = -50; j <= 50; ++j) {
        const double bessel = std::cyl_bessel_j(std::abs(j), 2.0 * c * z);
        worst = std::max(worst, std::abs(p[static_cast<std::size_t>(50 + j)] -
                                         bessel * bessel));
      }
      CHECK(worst < 1e-6);
    }
  }
  SUBCASE("rejects mismatched or negative input") {
    CHECK_THROWS_AS(evolve_spectral(two_site(1.0), StateVector::basis(3, 0), 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(evolve_spectral(two_site(1.0), StateVector::basis(2, 0), -1.0),
                    InvalidArgument);
  }
}

TEST_CASE("krylov backend") {
  SUBCASE("z = 0 is the identity") {
    const StateVector psi0 = random_state(9, 2);
    const Hamiltonian h = build_hamiltonian(square(3));
    CHECK(max_diff(evolve_krylov(h, psi0, 0.0), psi0) == 0.0);
  }
  SUBCASE("two sites: P0 = cos^2(Cz)") {
    const double c = 1.1;
    for (double z : {0.3, 2.0, 9.0}) {
      const ProbabilityGrid p = probabilities(
          evolve_krylov(two_site(c), StateVector::basis(2, 0), z));
      CHECK(std::abs(p[0] - std::pow(std::cos(c * z), 2)) < 1e-10);
    }
  }
  SUBCASE("matches the spectral backend on a 5x5 lattice") {
    const Lattice l = square(5);
    const Hamiltonian h = build_hamiltonian(l);
    const StateVector psi0 = StateVector::basis(l.size(), l.index(l.center()));
    const StateVector a = evolve_krylov(h, psi0, 5.0, {30, 1e-10});
    const StateVector b = evolve_spectral(h, psi0, 5.0);
    CHECK(max_diff(a, b) < 1e-8);
    CHECK(std::abs(a.norm() - 1.0) < 1e-9);
  }
  SUBCASE("small subspaces still converge by step splitting") {
    const Lattice l = square(6);
    const Hamiltonian h = build_hamiltonian(l);
    const StateVector psi0 = random_state(l.size(), 5);
    const StateVector a = evolve_krylov(h, psi0, 8.0, {6, 1e-9});
    CHECK(max_diff(a, evolve_spectral(h, psi0, 8.0)) < 1e-8);
  }
  SUBCASE("exhausted step budget is a ConvergenceError") {
    const Lattice l = square(8);
    KrylovOptions tight{3, 1e-12, 2};
    CHECK_THROWS_AS(
        evolve_krylov(build_hamiltonian(l), StateVector::basis(l.size(), 0),
                      50.0, tight),
        ConvergenceError);
  }
  SUBCASE("invalid options") {
    const Hamiltonian h = two_site(1.0);
    const StateVector psi0 = StateVector::basis(2, 0);
    CHECK_THROWS_AS(evolve_krylov(h, psi0, 1.0, {1, 1e-10}), InvalidArgument);
    CHECK_THROWS_AS(evolve_krylov(h, psi0, 1.0, {30, 0.0}), InvalidArgument);
  }
}

TEST_CASE("evolve_trace") {
  const Lattice l = square(7);
  const Hamiltonian h = build_hamiltonian(l);
  const StateVector psi0 = StateVector::basis(l.size(), l.index(l.center()));

  SUBCASE("z = [0] returns the initial probabilities") {
    const std::vector<double> zs = {0.0};
    for (Backend b : {Backend::spectral, Backend::krylov}) {
      const auto t = evolve_trace(h, psi0, zs, l.shape(), {b});
      REQUIRE(t.grids.size() == 1);
      CHECK(t.grids[0].at(l.center()) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("grids are normalized and threads do not change results") {
    std::vector<double> zs;
    for (int k = 0; k < 70; ++k) zs.push_back(0.15 * k);
    const auto serial = evolve_trace(h, psi0, zs, l.shape(), {Backend::spectral});
    TraceOptions par{Backend::spectral};
    par.threads = 4;
    const auto parallel = evolve_trace(h, psi0, zs, l.shape(), par);
    for (std::size_t k = 0; k < zs.size(); ++k) {
      CHECK(std::abs(serial.grids[k].total() - 1.0) < 1e-10);
      CHECK(serial.grids[k].values() == parallel.grids[k].values());
    }
  }
  SUBCASE("z values must increase strictly") {
    const std::vector<double> zs = {1.0, 1.0};
    CHECK_THROWS_AS(evolve_trace(h, psi0, zs, l.shape()), InvalidArgument);
    const std::vector<double> neg = {-1.0};
    CHECK_THROWS_AS(evolve_trace(h, psi0, neg, l.shape()), InvalidArgument);
  }
}

TEST_CASE("evolution properties on random lattices") {
  std::mt19937 rng(777);
  std::uniform_int_distribution<std::size_t> size(2, 9);
  std::uniform_real_distribution<double> zdist(0.1, 6.0);
  for (int trial = 0; trial < 12; ++trial) {
    LatticeSpec spec;
    spec.rows = size(rng);
    spec.cols = size(rng);
    const Lattice l(spec);
    const Hamiltonian h = build_hamiltonian(l, 0.2);
    const StateVector psi0 = random_state(l.size(), 100 + trial);
    const double z1 = zdist(rng);
    const double z2 = zdist(rng);

    // Composition.
    const StateVector direct = evolve_spectral(h, psi0, z1 + z2);
    const StateVector stepped = evolve_spectral(h, evolve_spectral(h, psi0, z1), z2);
    CHECK(max_diff(direct, stepped) < 1e-8);
    const StateVector kstepped =
        evolve_krylov(h, evolve_krylov(h, psi0, z1), z2);
    CHECK(max_diff(direct, kstepped) < 1e-8);

    // Time reversal.
    const StateVector back =
        evolve_spectral(h.scaled(-1.0), evolve_spectral(h, psi0, z1), z1);
    CHECK(max_diff(back, psi0) < 1e-8);

    // Unitarity.
    CHECK(std::abs(direct.norm() - 1.0) < 1e-10);
    CHECK(std::abs(kstepped.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("center injection patterns are mirror symmetric") {
  for (std::size_t n : {5u, 9u}) {
    const Lattice l = square(n);
    const Hamiltonian h = build_hamiltonian(l);
    const StateVector psi0 = StateVector::basis(l.size(), l.index(l.center()));
    for (double z : {1.0, 3.5, 8.0}) {
      const ProbabilityGrid p = probabilities(evolve_spectral(h, psi0, z), l.shape());
      double worst = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          worst = std::max(worst, std::abs(p.at(r, c) - p.at(n - 1 - r, c)));
          worst = std::max(worst, std::abs(p.at(r, c) - p.at(r, n - 1 - c)));
        }
      }
      CHECK(worst < 1e-10);
    }
  }
}
