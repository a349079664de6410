#pragma once

#include "pmpm/dynamics.hpp"

#include <numbers>
#include <optional>
#include <string>
#include <utility>

namespace pmpm {

// Quantum Fisher information of the augmented terminal state:
// F_Q = 4 (<psi1|psi1> - |<psi0|psi1>|^2).
inline double qfi_value(const AugmentedState& final_state) {
  const double n11 = final_state.psi1.squaredNorm();
  const Complex overlap = final_state.psi0.dot(final_state.psi1);
  return 4.0 * (n11 - std::norm(overlap));
}

// Internal terminal cost C_Q = -(<psi1|psi1> - |<psi1|psi0>|^2) = -F_Q / 4.
inline double qfi_cost(const AugmentedState& final_state) { return -0.25 * qfi_value(final_state); }

// Costate boundary from C_Q:
//   pi0(T) = +|psi1><psi1|psi0>,  pi1(T) = -|psi1> + |psi0><psi0|psi1>.
inline CostatePair qfi_costate_boundary(const AugmentedState& final_state) {
  const Complex c01 = final_state.psi0.dot(final_state.psi1);  // <psi0|psi1>
  CostatePair bc;
  bc.pi0 = final_state.psi1 * std::conj(c01);
  bc.pi1 = -final_state.psi1 + final_state.psi0 * c01;
  return bc;
}

// Outcome distribution of the phase-offset J_x measurement,
// P_m = |<m|_x e^{i phi J_z} |psi0(T)>|^2, together with its omega-derivative.
struct MeasurementDistribution {
  RealVector p;
  RealVector dp_domega;
};

namespace detail {

// alpha = U (e^{+i m phi} .* a) for real U and z-basis amplitudes a; m is the
// exact J_z eigenvalue of each z-basis index.
inline ComplexVector rotate_to_x_basis(const Eigensystem& eig, const ComplexVector& a, double phi) {
  const Eigen::Index dim = a.size();
  const double j = 0.5 * static_cast<double>(dim - 1);
  ComplexVector phased(dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    const double m = j - static_cast<double>(n);
    phased[n] = std::polar(1.0, m * phi) * a[n];
  }
  ComplexVector out(dim);
  out.real() = eig.u * phased.real();
  out.imag() = eig.u * phased.imag();
  return out;
}

}  // namespace detail

inline MeasurementDistribution measurement_distribution(const AugmentedState& final_state,
                                                        const Eigensystem& eig, double phi) {
  if (eig.u.rows() != final_state.psi0.size()) {
    throw std::invalid_argument("measurement_distribution: eigensystem dimension mismatch");
  }
  const ComplexVector alpha = detail::rotate_to_x_basis(eig, final_state.psi0, phi);
  const ComplexVector beta = detail::rotate_to_x_basis(eig, final_state.psi1, phi);
  MeasurementDistribution dist;
  dist.p = alpha.cwiseAbs2();
  dist.dp_domega.resize(alpha.size());
  for (Eigen::Index m = 0; m < alpha.size(); ++m) {
    dist.dp_domega[m] = 2.0 * std::real(std::conj(beta[m]) * alpha[m]);
  }
  return dist;
}

// Classical Fisher information F_C = sum_m (d_omega P_m)^2 / P_m, with the
// denominator clamped at p_clamp to keep the optimizer finite when P_m -> 0.
inline double cfi_value(const MeasurementDistribution& dist, double p_clamp = 1e-10) {
  double f = 0.0;
  for (Eigen::Index m = 0; m < dist.p.size(); ++m) {
    f += dist.dp_domega[m] * dist.dp_domega[m] / std::max(dist.p[m], p_clamp);
  }
  return f;
}

// Costate terminal boundary for C_C = -F_C plus the scalar dF_C/dphi.
// Clamped outcomes contribute with the clamped denominator.
inline std::pair<CostatePair, double> cfi_costate_boundary(const AugmentedState& final_state,
                                                           const Eigensystem& eig, double phi,
                                                           double p_clamp = 1e-10) {
  const Eigen::Index dim = final_state.psi0.size();
  if (eig.u.rows() != dim) {
    throw std::invalid_argument("cfi_costate_boundary: eigensystem dimension mismatch");
  }
  const double j = 0.5 * static_cast<double>(dim - 1);
  const ComplexVector alpha = detail::rotate_to_x_basis(eig, final_state.psi0, phi);
  const ComplexVector beta = detail::rotate_to_x_basis(eig, final_state.psi1, phi);

  // d alpha/d phi = U (i m e^{+i m phi} .* a), and likewise for beta.
  ComplexVector a_phased(dim), b_phased(dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    const double m = j - static_cast<double>(n);
    const Complex im_phase = Complex(0.0, m) * std::polar(1.0, m * phi);
    a_phased[n] = im_phase * final_state.psi0[n];
    b_phased[n] = im_phase * final_state.psi1[n];
  }
  ComplexVector dalpha(dim), dbeta(dim);
  dalpha.real() = eig.u * a_phased.real();
  dalpha.imag() = eig.u * a_phased.imag();
  dbeta.real() = eig.u * b_phased.real();
  dbeta.imag() = eig.u * b_phased.imag();

  RealVector w(dim), v(dim);
  double df_dphi = 0.0;
  for (Eigen::Index m = 0; m < dim; ++m) {
    const double p = std::max(std::norm(alpha[m]), p_clamp);
    const double d = 2.0 * std::real(std::conj(beta[m]) * alpha[m]);
    w[m] = -d * d / (p * p);
    v[m] = 2.0 * d / p;
    const double dp_dphi = 2.0 * std::real(std::conj(dalpha[m]) * alpha[m]);
    const double dd_dphi =
        2.0 * std::real(std::conj(dbeta[m]) * alpha[m] + std::conj(beta[m]) * dalpha[m]);
    df_dphi += w[m] * dp_dphi + v[m] * dd_dphi;
  }

  // dF/d a_n^* = e^{-i m_n phi} [U^T (w .* alpha + v .* beta)]_n and
  // dF/d b_n^* = e^{-i m_n phi} [U^T (v .* alpha)]_n; the boundary is their negative.
  ComplexVector wa_vb(dim), va(dim);
  for (Eigen::Index m = 0; m < dim; ++m) {
    wa_vb[m] = w[m] * alpha[m] + v[m] * beta[m];
    va[m] = v[m] * alpha[m];
  }
  ComplexVector t0(dim), t1(dim);
  t0.real() = eig.u.transpose() * wa_vb.real();
  t0.imag() = eig.u.transpose() * wa_vb.imag();
  t1.real() = eig.u.transpose() * va.real();
  t1.imag() = eig.u.transpose() * va.imag();
  CostatePair bc;
  bc.pi0.resize(dim);
  bc.pi1.resize(dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    const double m = j - static_cast<double>(n);
    const Complex back_phase = std::polar(1.0, -m * phi);
    bc.pi0[n] = -back_phase * t0[n];
    bc.pi1[n] = -back_phase * t1[n];
  }
  return {std::move(bc), df_dphi};
}

inline double fidelity_value(const ComplexVector& psi0_final, const ComplexVector& target) {
  if (psi0_final.size() != target.size()) {
    throw std::invalid_argument("fidelity_value: dimension mismatch");
  }
  return std::norm(target.dot(psi0_final));
}

// Boundary for C = -|<target|psi0(T)>|^2; psi1 plays no role in this cost.
inline CostatePair fidelity_costate_boundary(const ComplexVector& psi0_final,
                                             const ComplexVector& target) {
  CostatePair bc;
  bc.pi0 = -target * target.dot(psi0_final);
  bc.pi1 = ComplexVector::Zero(psi0_final.size());
  return bc;
}

// Terminal cost selector. CFI carries a phase offset phi, normalized to [0, 2 pi);
// fidelity carries a unit-norm target state.
struct CostKind {
  enum class Tag { qfi, cfi, fidelity };
  Tag tag = Tag::qfi;
  double phase = 0.0;
  ComplexVector target;

  static CostKind qfi() { return CostKind{Tag::qfi, 0.0, {}}; }
  static CostKind cfi(double phase) { return CostKind{Tag::cfi, normalize_phase(phase), {}}; }
  static CostKind fidelity(ComplexVector target_state) {
    if (std::abs(target_state.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("CostKind::fidelity: target must have unit norm");
    }
    return CostKind{Tag::fidelity, 0.0, std::move(target_state)};
  }

  static double normalize_phase(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
  }
};

inline const char* cost_name(CostKind::Tag tag) {
  switch (tag) {
    case CostKind::Tag::qfi: return "qfi";
    case CostKind::Tag::cfi: return "cfi";
    case CostKind::Tag::fidelity: return "fidelity";
  }
  return "?";
}

// Bundles a cost kind with whatever precomputation it needs (the J_x
// eigensystem for CFI). cost() is the scalar the optimizer minimizes;
// objective() is the user-facing value (QFI, CFI, or fidelity).
class TerminalCost {
 public:
  TerminalCost(int n_spins, CostKind kind, double cfi_clamp = 1e-10)
      : kind_(std::move(kind)), clamp_(cfi_clamp) {
    if (kind_.tag == CostKind::Tag::cfi) {
      eig_ = jx_eigensystem(n_spins);
    }
    if (kind_.tag == CostKind::Tag::fidelity && kind_.target.size() != n_spins + 1) {
      throw std::invalid_argument("TerminalCost: fidelity target dimension mismatch");
    }
  }

  const CostKind& kind() const { return kind_; }
  bool uses_phase() const { return kind_.tag == CostKind::Tag::cfi; }
  const Eigensystem& eigensystem() const { return *eig_; }

  double cost(const AugmentedState& final_state, double phase) const {
    switch (kind_.tag) {
      case CostKind::Tag::qfi: return qfi_cost(final_state);
      case CostKind::Tag::cfi:
        return -cfi_value(measurement_distribution(final_state, *eig_, phase), clamp_);
      case CostKind::Tag::fidelity: return -fidelity_value(final_state.psi0, kind_.target);
    }
    return 0.0;
  }

  // Maps the minimized cost back to the reported objective.
  double objective_from_cost(double cost_value) const {
    return kind_.tag == CostKind::Tag::qfi ? -4.0 * cost_value : -cost_value;
  }

  double objective(const AugmentedState& final_state, double phase) const {
    return objective_from_cost(cost(final_state, phase));
  }

  CostatePair boundary(const AugmentedState& final_state, double phase) const {
    switch (kind_.tag) {
      case CostKind::Tag::qfi: return qfi_costate_boundary(final_state);
      case CostKind::Tag::cfi:
        return cfi_costate_boundary(final_state, *eig_, phase, clamp_).first;
      case CostKind::Tag::fidelity:
        return fidelity_costate_boundary(final_state.psi0, kind_.target);
    }
    return {};
  }

  // dF_C/dphi; zero for phase-free costs.
  double phase_gradient(const AugmentedState& final_state, double phase) const {
    if (kind_.tag != CostKind::Tag::cfi) return 0.0;
    return cfi_costate_boundary(final_state, *eig_, phase, clamp_).second;
  }

 private:
  CostKind kind_;
  double clamp_;
  std::optional<Eigensystem> eig_;
};

}  // namespace pmpm
