#include <doctest.h>

#include <sstream>

#include "qwalk/evolution.hpp"
#include "qwalk/hamiltonian.hpp"
#include "qwalk/observables.hpp"

using namespace qwalk;

namespace {

LatticeSpec chain(std::size_t n, double cutoff = 20.0) {
  LatticeSpec spec;
  spec.rows = 1;
  spec.cols = n;
  spec.cutoff_um = cutoff;
  return spec;
}

}  // namespace

TEST_CASE("build_hamiltonian small cases") {
  SUBCASE("two sites, beta 0") {
    const Lattice l(chain(2));
    const Hamiltonian h = build_hamiltonian(l);
    const double c = coupling_coefficient(l.spec().coupling, 13.5, 0.0);
    CHECK(h.dense()(0, 0) == 0.0);
    CHECK(h.dense()(1, 1) == 0.0);
    CHECK(h.dense()(0, 1) == c);
    CHECK(h.dense()(1, 0) == c);
  }
  SUBCASE("single site carries beta") {
    const Hamiltonian h = build_hamiltonian(Lattice(chain(1)), 2.5);
    CHECK(h.size() == 1);
    CHECK(h.dense()(0, 0) == 2.5);
  }
  SUBCASE("three-site chain is tridiagonal") {
    const Hamiltonian h = build_hamiltonian(Lattice(chain(3)), 0.0);
    CHECK(h.dense()(0, 2) == 0.0);
    CHECK(h.dense()(0, 1) == h.dense()(1, 2));
    CHECK(h.dense()(0, 1) > 0.0);
  }
}

TEST_CASE("hermiticity_check") {
  LatticeSpec spec;
  spec.rows = 6;
  spec.cols = 5;
  const auto report = hermiticity_check(build_hamiltonian(Lattice(spec), 0.3));
  CHECK(report.passed);
  CHECK(report.max_asymmetry == 0.0);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = 1.0;
  const auto failed = hermiticity_check(bad);
  CHECK_FALSE(failed.passed);
  CHECK(failed.max_asymmetry == 1.0);

  CHECK(hermiticity_check(Eigen::MatrixXd::Constant(1, 1, 4.0)).passed);
}

TEST_CASE("sparsity equals twice the pair count") {
  LatticeSpec spec;
  spec.rows = 7;
  spec.cols = 6;
  const Lattice l(spec);
  const Hamiltonian h = build_hamiltonian(l);
  const Eigen::MatrixXd& m = h.dense();
  std::size_t off_diagonal = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) ++off_diagonal;
    }
  }
  CHECK(off_diagonal == 2 * neighbor_pairs(l).size());
  CHECK((m.diagonal().array() == 0.0).all());
}

TEST_CASE("apply agrees with the dense product") {
  LatticeSpec spec;
  spec.rows = 5;
  spec.cols = 4;
  const Hamiltonian h = build_hamiltonian(Lattice(spec), -0.7);
  Eigen::VectorXcd x = Eigen::VectorXcd::Random(20);
  const Eigen::VectorXcd dense = h.dense().cast<std::complex<double>>() * x;
  CHECK((h.apply(x) - dense).norm() < 1e-14);
  CHECK((h.scaled(-1.0).dense() + h.dense()).norm() == 0.0);
}

TEST_CASE("probabilities do not depend on beta") {
  LatticeSpec spec;
  spec.rows = 5;
  spec.cols = 5;
  const Lattice l(spec);
  const StateVector psi0 = StateVector::basis(l.size(), l.index(l.center()));
  const Hamiltonian h1 = build_hamiltonian(l, 0.0);
  const Hamiltonian h2 = build_hamiltonian(l, 37.25);
  const std::vector<double> zs = {0.3, 1.7, 4.2, 9.9};
  const auto t1 = evolve_trace(h1, psi0, zs, l.shape());
  const auto t2 = evolve_trace(h2, psi0, zs, l.shape());
  double worst = 0.0;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    for (std::size_t j = 0; j < l.size(); ++j) {
      worst = std::max(worst, std::abs(t1.grids[k][j] - t2.grids[k][j]));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("matrix CSV dump lists nonzero triplets") {
  const Hamiltonian h = build_hamiltonian(Lattice(chain(2)), 1.0);
  std::ostringstream out;
  write_matrix_csv(out, h);
  const std::string text = out.str();
  CHECK(text.rfind("row,col,value\n0,0,1\n0,1,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
