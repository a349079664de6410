#pragma once

#include "pmpm/pmp_optimizer.hpp"

#include <random>
#include <string>
#include <vector>

namespace pmpm {

// Finite-difference and brute-force verifiers. These paths never touch the
// costate machinery: parameter derivatives use psi0-only unitary evolutions and
// cost gradients use forward augmented evolutions only. All oracle integrations
// run at 4x the default substep count for accuracy margin.

struct OracleSettings {
  double delta_omega = 1e-4;
  double delta_control = 1e-6;
  int substep_multiplier = 4;
};

inline int oracle_substeps(const ProblemSpec& spec, int n_intervals,
                           const OracleSettings& settings) {
  return settings.substep_multiplier * default_substeps(spec, n_intervals, 1);
}

// Central difference [psi0(T; omega+d) - psi0(T; omega-d)] / (2d) from unitary
// evolutions of the default coherent-x initial state.
inline ComplexVector fd_parameter_derivative(const ProblemSpec& spec,
                                             const ControlProtocol& control, double delta,
                                             const OracleSettings& settings = {}) {
  if (!(delta > 0.0)) throw std::invalid_argument("fd_parameter_derivative: delta must be > 0");
  const int n_sub = oracle_substeps(spec, control.n_intervals, settings);
  const ComplexVector psi_init = coherent_x_state(spec.n_spins);
  ProblemSpec plus = spec;
  plus.omega = spec.omega + delta;
  ProblemSpec minus = spec;
  minus.omega = spec.omega - delta;
  const ComplexVector psi_plus = evolve_unitary_final(plus, control, psi_init, n_sub);
  const ComplexVector psi_minus = evolve_unitary_final(minus, control, psi_init, n_sub);
  return (psi_plus - psi_minus) / (2.0 * delta);
}

// Central difference of the scalar terminal cost with respect to one control value.
inline double fd_cost_gradient(const ProblemSpec& spec, const ControlProtocol& control,
                               const TerminalCost& cost, double phase, int index, double delta,
                               const OracleSettings& settings = {}) {
  if (index < 0 || index >= control.n_intervals) {
    throw std::invalid_argument("fd_cost_gradient: control index out of range");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("fd_cost_gradient: delta must be > 0");
  const int n_sub = oracle_substeps(spec, control.n_intervals, settings);
  const AugmentedState init = initial_augmented_state(spec.n_spins);
  ControlProtocol perturbed = control;
  perturbed.values[index] = control.values[index] + delta;
  const double c_plus = cost.cost(evolve_final_state(spec, perturbed, init, n_sub), phase);
  perturbed.values[index] = control.values[index] - delta;
  const double c_minus = cost.cost(evolve_final_state(spec, perturbed, init, n_sub), phase);
  return (c_plus - c_minus) / (2.0 * delta);
}

inline RealVector fd_cost_gradient_all(const ProblemSpec& spec, const ControlProtocol& control,
                                       const TerminalCost& cost, double phase, double delta,
                                       const OracleSettings& settings = {}) {
  RealVector g(control.n_intervals);
  for (int i = 0; i < control.n_intervals; ++i) {
    g[i] = fd_cost_gradient(spec, control, cost, phase, i, delta, settings);
  }
  return g;
}

// Least-squares fit fd ~ c * g plus the spread of the per-index ratios around c.
struct ProportionalityFit {
  double constant = 0.0;
  double ratio_spread = 0.0;   // (max ratio - min ratio) / |constant|
  double max_rel_err = 0.0;    // max |fd - c g| / max |fd|
  int n_used = 0;
};

inline ProportionalityFit fit_proportionality(const RealVector& fd, const RealVector& g) {
  if (fd.size() != g.size() || fd.size() == 0) {
    throw std::invalid_argument("fit_proportionality: size mismatch");
  }
  ProportionalityFit fit;
  const double g2 = g.squaredNorm();
  if (g2 == 0.0) return fit;
  fit.constant = fd.dot(g) / g2;
  const double g_scale = g.cwiseAbs().maxCoeff();
  const double fd_scale = fd.cwiseAbs().maxCoeff();
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) > 1e-9 * g_scale) {
      const double r = fd[i] / g[i];
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      ++fit.n_used;
    }
    if (fd_scale > 0.0) {
      fit.max_rel_err =
          std::max(fit.max_rel_err, std::abs(fd[i] - fit.constant * g[i]) / fd_scale);
    }
  }
  if (fit.n_used > 0 && fit.constant != 0.0) {
    fit.ratio_spread = (rmax - rmin) / std::abs(fit.constant);
  }
  return fit;
}

// Full Cartesian grid search over control values on tiny instances. Refuses
// grids with more than 10^6 points.
inline ControlProtocol exhaustive_small_search(const ProblemSpec& spec, const CostKind& kind,
                                               int n_intervals, const std::vector<double>& grid,
                                               const OracleSettings& settings = {}) {
  validate(spec);
  if (grid.empty()) throw std::invalid_argument("exhaustive_small_search: empty value grid");
  if (n_intervals < 1 || n_intervals > 3) {
    throw std::invalid_argument("exhaustive_small_search: n_intervals must be 1..3");
  }
  double combos = 1.0;
  for (int i = 0; i < n_intervals; ++i) combos *= static_cast<double>(grid.size());
  if (combos > 1e6) {
    throw std::invalid_argument("exhaustive_small_search: grid larger than 10^6 points refused");
  }
  const TerminalCost cost(spec.n_spins, kind);
  const AugmentedState init = initial_augmented_state(spec.n_spins);
  const int n_sub = oracle_substeps(spec, n_intervals, settings);
  ControlProtocol best{n_intervals, spec.t_final, RealVector::Zero(n_intervals)};
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(n_intervals, 0);
  ControlProtocol trial{n_intervals, spec.t_final, RealVector(n_intervals)};
  const std::size_t total = static_cast<std::size_t>(combos);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = 0; i < n_intervals; ++i) {
      idx[i] = rem % grid.size();
      rem /= grid.size();
      trial.values[i] = grid[idx[i]];
    }
    const double c = cost.cost(evolve_final_state(spec, trial, init, n_sub), kind.phase);
    if (c < best_cost) {
      best_cost = c;
      best = trial;
    }
  }
  return best;
}

struct CostGradientCheck {
  std::string cost_name;
  double constant = 0.0;
  double spread = 0.0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradientCheckReport {
  double delta_omega = 0.0;
  double delta_control = 0.0;
  std::uint64_t seed = 0;
  double psi1_rel_err = 0.0;
  double psi1_rel_err_half_delta = 0.0;
  bool psi1_pass = false;
  bool truncation_dominated = false;
  double pairing_drift = 0.0;
  bool pairing_pass = false;
  std::vector<CostGradientCheck> gradient_checks;
  bool pass = false;
};

namespace detail {

inline RealVector random_control_values(int n, std::mt19937_64& rng, double lo = -2.0,
                                        double hi = 2.0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  RealVector v(n);
  for (int i = 0; i < n; ++i) v[i] = uni(rng);
  return v;
}

inline Complex pairing(const CostatePair& pi, const AugmentedState& psi) {
  return pi.pi0.dot(psi.psi0) + pi.pi1.dot(psi.psi1);
}

inline ComplexVector random_complex_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(uni(rng), uni(rng));
  return v;
}

}  // namespace detail

// Gradient and adjoint-consistency checks at one instance; corrupt_costate_sign
// is a test hook that flips the costate boundary to demonstrate the checks fail
// on a broken adjoint.
inline GradientCheckReport run_gradient_checks(const ProblemSpec& spec, int n_intervals,
                                               const OracleSettings& settings, std::uint64_t seed,
                                               bool corrupt_costate_sign = false) {
  validate(spec);
  GradientCheckReport report;
  report.delta_omega = settings.delta_omega;
  report.delta_control = settings.delta_control;
  report.seed = seed;
  std::mt19937_64 rng(seed);
  ControlProtocol control{n_intervals, spec.t_final,
                          detail::random_control_values(n_intervals, rng)};
  const AugmentedState init = initial_augmented_state(spec.n_spins);
  const SpinOperators ops = build_operators(spec.n_spins);
  const int n_sub = default_substeps(spec, n_intervals, 1);

  // (1) psi1(T) against the finite-difference omega-derivative, plus the same
  // check at delta/2 to attribute failures to truncation versus roundoff.
  {
    const AugmentedState final_state = evolve_final_state(spec, control, init, n_sub);
    const ComplexVector fd = fd_parameter_derivative(spec, control, settings.delta_omega, settings);
    const double scale = std::max(final_state.psi1.norm(), 1e-300);
    report.psi1_rel_err = (final_state.psi1 - fd).norm() / scale;
    const ComplexVector fd_half =
        fd_parameter_derivative(spec, control, 0.5 * settings.delta_omega, settings);
    report.psi1_rel_err_half_delta = (final_state.psi1 - fd_half).norm() / scale;
    report.psi1_pass = report.psi1_rel_err <= 1e-6;
    if (!report.psi1_pass && report.psi1_rel_err_half_delta > 0.0) {
      const double ratio = report.psi1_rel_err / report.psi1_rel_err_half_delta;
      report.truncation_dominated = ratio > 2.0;  // ~4 for an O(delta^2) scheme
    }
  }

  // (2) Pairing invariant <pi0|psi0> + <pi1|psi1> constant along matched
  // forward/backward trajectories with a random terminal costate.
  {
    const int k = 8;
    const SampledTrajectory fwd = evolve_forward(spec, control, init, k, n_sub);
    CostatePair terminal;
    terminal.pi0 = detail::random_complex_vector(ops.dim, rng);
    terminal.pi1 = detail::random_complex_vector(ops.dim, rng);
    const SampledCostateTrajectory bwd =
        evolve_costate_backward(spec, control, terminal, k, n_sub);
    const Complex ref = detail::pairing(bwd.back(), fwd.back());
    double drift = 0.0;
    for (Eigen::Index s = 0; s < fwd.n_samples(); ++s) {
      drift = std::max(drift, std::abs(detail::pairing(bwd.state_at(s), fwd.state_at(s)) - ref));
    }
    report.pairing_drift = drift / std::max(1.0, std::abs(ref));
    report.pairing_pass = report.pairing_drift <= 1e-9;
  }

  // (3) Per-interval switching-function gradients against central differences
  // of each cost, up to one shared positive constant.
  const std::vector<CostKind> kinds{CostKind::qfi(), CostKind::cfi(0.3),
                                    CostKind::fidelity(hl_state(spec.n_spins))};
  for (const CostKind& kind : kinds) {
    const TerminalCost cost(spec.n_spins, kind, 1e-10);
    const double phase = kind.phase;
    const SampledTrajectory fwd = evolve_forward(spec, control, init, n_sub, n_sub);
    CostatePair bc = cost.boundary(fwd.back(), phase);
    if (corrupt_costate_sign) {
      bc.pi0 = -bc.pi0;
      bc.pi1 = -bc.pi1;
    }
    const SampledCostateTrajectory bwd =
        evolve_costate_backward(spec, control, bc, n_sub, n_sub);
    const RealVector phi = switching_function(fwd, bwd, ops);
    const RealVector grad =
        interval_gradients(phi, n_intervals, n_sub, control.interval_length());
    const RealVector fd =
        fd_cost_gradient_all(spec, control, cost, phase, settings.delta_control, settings);
    const ProportionalityFit fit = fit_proportionality(fd, grad);
    CostGradientCheck check;
    check.cost_name = cost_name(kind.tag);
    check.constant = fit.constant;
    check.spread = fit.ratio_spread;
    check.max_rel_err = fit.max_rel_err;
    check.pass = fit.constant > 0.0 && fit.ratio_spread <= 1e-3 && fit.n_used > 0;
    report.gradient_checks.push_back(check);
  }

  report.pass = report.psi1_pass && report.pairing_pass;
  for (const CostGradientCheck& c : report.gradient_checks) report.pass = report.pass && c.pass;
  return report;
}

}  // namespace pmpm
