#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace pmpm {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// Collective spin-J operators (J = N/2) in the J_z eigenbasis.
// Basis index i corresponds to m = N/2 - i, i.e. m runs from +N/2 down to -N/2.
struct SpinOperators {
  int n_spins = 0;
  int dim = 0;             // N + 1
  RealVector jz;           // diagonal of J_z
  RealVector jz2;          // diagonal of J_z^2
  RealVector jx_offdiag;   // first off-diagonal of J_x; entry i couples indices i and i+1
  RealMatrix jx;           // dense J_x (real symmetric tridiagonal)
};

inline SpinOperators build_operators(int n_spins) {
  if (n_spins < 1) {
    throw std::invalid_argument("build_operators: n_spins must be a positive integer");
  }
  SpinOperators ops;
  ops.n_spins = n_spins;
  ops.dim = n_spins + 1;
  const double j = 0.5 * n_spins;
  ops.jz.resize(ops.dim);
  ops.jz2.resize(ops.dim);
  for (int i = 0; i < ops.dim; ++i) {
    const double m = j - i;
    ops.jz[i] = m;
    ops.jz2[i] = m * m;
  }
  // <m|J_x|m-1> = <m-1|J_x|m> = sqrt(J(J+1) - m(m-1)) / 2, with m = J - i on row i.
  ops.jx_offdiag.resize(ops.dim - 1);
  for (int i = 0; i + 1 < ops.dim; ++i) {
    const double m = j - i;
    ops.jx_offdiag[i] = 0.5 * std::sqrt(j * (j + 1.0) - m * (m - 1.0));
  }
  ops.jx = RealMatrix::Zero(ops.dim, ops.dim);
  for (int i = 0; i + 1 < ops.dim; ++i) {
    ops.jx(i, i + 1) = ops.jx_offdiag[i];
    ops.jx(i + 1, i) = ops.jx_offdiag[i];
  }
  return ops;
}

// Non-entangled maximum-eigenvalue state of J_x. Its z-basis amplitudes are
// binomial, amp_i = 2^{-N/2} sqrt(C(N,i)), so it is built by recurrence instead
// of an eigensolve; every amplitude is real and positive.
inline ComplexVector coherent_x_state(int n_spins) {
  if (n_spins < 1) {
    throw std::invalid_argument("coherent_x_state: n_spins must be a positive integer");
  }
  const int dim = n_spins + 1;
  RealVector amp(dim);
  amp[0] = std::pow(2.0, -0.5 * n_spins);
  for (int i = 0; i + 1 < dim; ++i) {
    amp[i + 1] = amp[i] * std::sqrt(static_cast<double>(n_spins - i) / (i + 1.0));
  }
  amp /= amp.norm();
  return amp.cast<Complex>();
}

// (|+M>_z + |-M>_z)/sqrt(2) with M = N/2: the state saturating the Heisenberg limit.
inline ComplexVector hl_state(int n_spins) {
  if (n_spins < 1) {
    throw std::invalid_argument("hl_state: n_spins must be a positive integer");
  }
  ComplexVector state = ComplexVector::Zero(n_spins + 1);
  const double a = 1.0 / std::sqrt(2.0);
  state[0] = a;
  state[n_spins] = a;
  return state;
}

// Full eigendecomposition of J_x. Row r of u is the eigenvector with eigenvalue
// eigenvalues[r] = N/2 - r (rows ordered by descending eigenvalue); each row's
// sign is fixed so that its first non-negligible entry is positive.
struct Eigensystem {
  RealMatrix u;
  RealVector eigenvalues;
};

inline Eigensystem jx_eigensystem(int n_spins) {
  const SpinOperators ops = build_operators(n_spins);
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(ops.jx);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("jx_eigensystem: eigendecomposition failed");
  }
  const int dim = ops.dim;
  Eigensystem eig;
  eig.u.resize(dim, dim);
  eig.eigenvalues.resize(dim);
  for (int r = 0; r < dim; ++r) {
    // Eigen sorts ascending; flip to descending.
    eig.eigenvalues[r] = solver.eigenvalues()[dim - 1 - r];
    RealVector v = solver.eigenvectors().col(dim - 1 - r);
    const double threshold = 1e-12 * v.cwiseAbs().maxCoeff();
    for (int i = 0; i < dim; ++i) {
      if (std::abs(v[i]) > threshold) {
        if (v[i] < 0.0) v = -v;
        break;
      }
    }
    eig.u.row(r) = v.transpose();
  }
  return eig;
}

}  // namespace pmpm
