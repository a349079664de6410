#include "pmpm/spin_algebra.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pmpm;

namespace {

// Independent J_y construction from ladder operators, used as the commutator oracle.
ComplexMatrix build_jy(int n_spins) {
  const int dim = n_spins + 1;
  const double j = 0.5 * n_spins;
  ComplexMatrix jplus = ComplexMatrix::Zero(dim, dim);
  for (int i = 1; i < dim; ++i) {
    const double m = j - i;  // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>
    jplus(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  const ComplexMatrix jminus = jplus.adjoint();
  return (jplus - jminus) / Complex(0.0, 2.0);
}

}  // namespace

TEST_CASE("build_operators rejects non-positive spin counts") {
  CHECK_THROWS_AS(build_operators(0), std::invalid_argument);
  CHECK_THROWS_AS(build_operators(-3), std::invalid_argument);
}

TEST_CASE("spin-1/2 operators match the Pauli matrices over two") {
  const SpinOperators ops = build_operators(1);
  REQUIRE(ops.dim == 2);
  CHECK(ops.jz[0] == 0.5);
  CHECK(ops.jz[1] == -0.5);
  CHECK(ops.jx(0, 1) == Catch::Approx(0.5).margin(1e-15));
  CHECK(ops.jx(1, 0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(ops.jx(0, 0) == 0.0);
  CHECK(ops.jx(1, 1) == 0.0);
}

TEST_CASE("spin-1 operators match the ladder algebra") {
  const SpinOperators ops = build_operators(2);
  REQUIRE(ops.dim == 3);
  CHECK(ops.jz[0] == 1.0);
  CHECK(ops.jz[1] == 0.0);
  CHECK(ops.jz[2] == -1.0);
  CHECK(ops.jx_offdiag[0] == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(ops.jx_offdiag[1] == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("jz entries decrease from +N/2 to -N/2 in unit steps") {
  for (int n : {1, 2, 7, 20}) {
    const SpinOperators ops = build_operators(n);
    for (int i = 0; i < ops.dim; ++i) {
      CHECK(ops.jz[i] == Catch::Approx(0.5 * n - i).margin(0.0));
      CHECK(ops.jz2[i] == ops.jz[i] * ops.jz[i]);
    }
  }
}

TEST_CASE("commutator identity [jx, jz] = -i jy") {
  for (int n : {1, 2, 5, 20}) {
    const SpinOperators ops = build_operators(n);
    const ComplexMatrix jx = ops.jx.cast<Complex>();
    ComplexMatrix jz = ComplexMatrix::Zero(ops.dim, ops.dim);
    jz.diagonal() = ops.jz.cast<Complex>();
    const ComplexMatrix jy = build_jy(n);
    const ComplexMatrix residual = jx * jz - jz * jx + Complex(0.0, 1.0) * jy;
    const double bound = 1e-12 * ops.jx.norm() * ops.jz.norm();
    CHECK(residual.norm() <= bound);
  }
}

TEST_CASE("coherent x state has the known small-N amplitudes") {
  const ComplexVector v1 = coherent_x_state(1);
  CHECK(std::abs(v1[0] - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(v1[1] - 1.0 / std::sqrt(2.0)) < 1e-14);

  const ComplexVector v2 = coherent_x_state(2);
  CHECK(std::abs(v2[0] - 0.5) < 1e-14);
  CHECK(std::abs(v2[1] - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(v2[2] - 0.5) < 1e-14);
}

TEST_CASE("coherent x state is the top jx eigenvector with nonnegative amplitudes") {
  for (int n : {1, 2, 3, 10, 20, 57, 128}) {
    const SpinOperators ops = build_operators(n);
    const ComplexVector v = coherent_x_state(n);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    const double residual = (ops.jx.cast<Complex>() * v - (0.5 * n) * v).norm();
    CHECK(residual <= 1e-10);
    for (int i = 0; i < ops.dim; ++i) {
      CHECK(v[i].imag() == 0.0);
      CHECK(v[i].real() >= 0.0);
    }
  }
}

TEST_CASE("coherent x state variance identity <Jz^2> = N/4") {
  for (int n : {1, 2, 10, 50, 200}) {
    const SpinOperators ops = build_operators(n);
    const ComplexVector v = coherent_x_state(n);
    double var = 0.0;
    double mean = 0.0;
    for (int i = 0; i < ops.dim; ++i) {
      const double p = std::norm(v[i]);
      var += ops.jz2[i] * p;
      mean += ops.jz[i] * p;
    }
    CHECK(std::abs(var - 0.25 * n) <= 1e-10 * std::max(1.0, 0.25 * n));
    CHECK(std::abs(mean) <= 1e-12 * n);
  }
}

TEST_CASE("hl state definition") {
  const ComplexVector v = hl_state(2);
  CHECK(std::abs(v[0] - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(v[1]) == 0.0);
  CHECK(std::abs(v[2] - 1.0 / std::sqrt(2.0)) < 1e-15);

  // Two-level coincidence with the coherent state.
  CHECK((hl_state(1) - coherent_x_state(1)).norm() < 1e-14);

  const ComplexVector v20 = hl_state(20);
  for (int i = 1; i < 20; ++i) CHECK(std::abs(v20[i]) == 0.0);
  CHECK(std::abs(v20.norm() - 1.0) < 1e-15);
}

TEST_CASE("jx eigensystem for a single spin") {
  const Eigensystem eig = jx_eigensystem(1);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(eig.eigenvalues[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(eig.eigenvalues[1] == Catch::Approx(-0.5).margin(1e-12));
  CHECK(std::abs(eig.u(0, 0) - r) < 1e-12);
  CHECK(std::abs(eig.u(0, 1) - r) < 1e-12);
  CHECK(std::abs(eig.u(1, 0) - r) < 1e-12);
  CHECK(std::abs(eig.u(1, 1) + r) < 1e-12);
}

TEST_CASE("jx eigensystem reconstruction, spectrum, and orthogonality") {
  for (int n : {1, 2, 5, 20, 63, 200}) {
    const SpinOperators ops = build_operators(n);
    const Eigensystem eig = jx_eigensystem(n);
    for (int r = 0; r < ops.dim; ++r) {
      CHECK(std::abs(eig.eigenvalues[r] - (0.5 * n - r)) <= 1e-10);
    }
    const RealMatrix recon = eig.u * ops.jx * eig.u.transpose();
    RealMatrix expected = RealMatrix::Zero(ops.dim, ops.dim);
    expected.diagonal() = eig.eigenvalues;
    CHECK((recon - expected).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((eig.u * eig.u.transpose() - RealMatrix::Identity(ops.dim, ops.dim))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    CHECK((eig.u.transpose() * eig.u - RealMatrix::Identity(ops.dim, ops.dim))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("top jx eigenrow equals the coherent x state up to sign") {
  for (int n : {1, 2, 10, 40}) {
    const Eigensystem eig = jx_eigensystem(n);
    const ComplexVector coh = coherent_x_state(n);
    RealVector row = eig.u.row(0).transpose();
    if (row.dot(coh.real()) < 0.0) row = -row;
    CHECK((row - coh.real()).norm() <= 1e-10);
  }
}
