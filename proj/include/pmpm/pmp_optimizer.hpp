#pragma once

#include "pmpm/fisher_costs.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace pmpm {

namespace detail {

// <bra| J_x |ket> for the tridiagonal J_x.
inline Complex jx_sandwich(const SpinOperators& ops, const Complex* bra, const Complex* ket) {
  const int d = ops.dim;
  const double* ox = ops.jx_offdiag.data();
  Complex acc(0.0, 0.0);
  for (int i = 0; i + 1 < d; ++i) {
    acc += ox[i] * (std::conj(bra[i]) * ket[i + 1] + std::conj(bra[i + 1]) * ket[i]);
  }
  return acc;
}

inline Complex jz_sandwich(const SpinOperators& ops, const Complex* bra, const Complex* ket) {
  const int d = ops.dim;
  Complex acc(0.0, 0.0);
  for (int i = 0; i < d; ++i) acc += ops.jz[i] * std::conj(bra[i]) * ket[i];
  return acc;
}

// <bra| chi J_z^2 + omega J_z + u J_x |ket>
inline Complex h_sandwich(const SpinOperators& ops, double chi, double omega, double u,
                          const Complex* bra, const Complex* ket) {
  const int d = ops.dim;
  Complex acc(0.0, 0.0);
  for (int i = 0; i < d; ++i) {
    acc += (chi * ops.jz2[i] + omega * ops.jz[i]) * std::conj(bra[i]) * ket[i];
  }
  return acc + u * jx_sandwich(ops, bra, ket);
}

template <class A, class B>
void require_matched_grids(const Sampled<A>& fwd, const Sampled<B>& bwd) {
  if (fwd.n_samples() != bwd.n_samples() || fwd.dim != bwd.dim ||
      fwd.samples_per_interval != bwd.samples_per_interval ||
      fwd.times.size() == 0 || fwd.times[0] != bwd.times[0] ||
      fwd.times[fwd.times.size() - 1] != bwd.times[bwd.times.size() - 1]) {
    throw std::invalid_argument("switching diagnostics: forward/backward sample grids differ");
  }
}

}  // namespace detail

// Switching function samples Phi(t) = Im(<pi0|J_x|psi0> + <pi1|J_x|psi1>) on the
// shared forward/backward grid.
inline RealVector switching_function(const SampledTrajectory& fwd,
                                     const SampledCostateTrajectory& bwd,
                                     const SpinOperators& ops) {
  detail::require_matched_grids(fwd, bwd);
  const int d = fwd.dim;
  if (d != ops.dim) throw std::invalid_argument("switching_function: operator dimension mismatch");
  RealVector phi(fwd.n_samples());
  for (Eigen::Index s = 0; s < fwd.n_samples(); ++s) {
    const Complex* psi = fwd.data.col(s).data();
    const Complex* pi = bwd.data.col(s).data();
    phi[s] = std::imag(detail::jx_sandwich(ops, pi, psi) +
                       detail::jx_sandwich(ops, pi + d, psi + d));
  }
  return phi;
}

// Control Hamiltonian samples
// H_c(t) = Im(<pi0|H|psi0> + <pi1|J_z|psi0> + <pi1|H|psi1>), with the interval's
// control value inside H (right-open interval convention at sample boundaries).
inline RealVector control_hamiltonian(const SampledTrajectory& fwd,
                                      const SampledCostateTrajectory& bwd,
                                      const SpinOperators& ops, const ProblemSpec& spec,
                                      const ControlProtocol& control) {
  detail::require_matched_grids(fwd, bwd);
  const int d = fwd.dim;
  if (d != ops.dim) throw std::invalid_argument("control_hamiltonian: operator dimension mismatch");
  const int k = fwd.samples_per_interval;
  RealVector hc(fwd.n_samples());
  for (Eigen::Index s = 0; s < fwd.n_samples(); ++s) {
    const int interval = std::min<int>(static_cast<int>(s / k), control.n_intervals - 1);
    const double u = control.values[interval];
    const Complex* psi = fwd.data.col(s).data();
    const Complex* pi = bwd.data.col(s).data();
    hc[s] = std::imag(detail::h_sandwich(ops, spec.chi, spec.omega, u, pi, psi) +
                      detail::jz_sandwich(ops, pi + d, psi) +
                      detail::h_sandwich(ops, spec.chi, spec.omega, u, pi + d, psi + d));
  }
  return hc;
}

// Mean and RMS of Phi over [0, T] by trapezoid quadrature on a uniform grid:
// Phi_m = (1/T) int Phi dt, Phi_sd = sqrt((1/T) int Phi^2 dt).
inline std::pair<double, double> phi_statistics(const RealVector& phi, double t_final) {
  if (phi.size() < 2) throw std::invalid_argument("phi_statistics: need at least 2 samples");
  const Eigen::Index n = phi.size();
  const double h = t_final / static_cast<double>(n - 1);
  double s1 = 0.5 * (phi[0] + phi[n - 1]);
  double s2 = 0.5 * (phi[0] * phi[0] + phi[n - 1] * phi[n - 1]);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    s1 += phi[i];
    s2 += phi[i] * phi[i];
  }
  return {h * s1 / t_final, std::sqrt(h * s2 / t_final)};
}

// Componentwise clamp to [-u_max, +u_max] (closest extreme value).
inline RealVector project_control(const RealVector& values, double u_max) {
  if (!(u_max > 0.0)) throw std::invalid_argument("project_control: u_max must be positive");
  return values.cwiseMax(-u_max).cwiseMin(u_max);
}

// Per-interval gradient g_i = dt * (trapezoid mean of Phi over interval i); Phi
// must be sampled uniformly with samples_per_interval samples per interval.
inline RealVector interval_gradients(const RealVector& phi, int n_intervals,
                                     int samples_per_interval, double interval_length) {
  const int k = samples_per_interval;
  if (phi.size() != static_cast<Eigen::Index>(k) * n_intervals + 1) {
    throw std::invalid_argument("interval_gradients: sample count does not match grid");
  }
  RealVector g(n_intervals);
  for (int i = 0; i < n_intervals; ++i) {
    const Eigen::Index base = static_cast<Eigen::Index>(i) * k;
    double acc = 0.5 * (phi[base] + phi[base + k]);
    for (int s = 1; s < k; ++s) acc += phi[base + s];
    g[i] = interval_length * acc / k;
  }
  return g;
}

struct DiagnosticsSeries {
  RealVector times;
  RealVector phi;
  RealVector hc;
  double phi_mean = 0.0;
  double phi_sd = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double phi_sd = 0.0;
  double step_size = 0.0;
};

struct OptimizerOptions {
  int n_intervals = 64;
  int max_iters = 2000;
  double tol_phi_sd = 1e-3;
  double initial_step = 1.0;
  double armijo_c1 = 1e-4;
  double backtrack_shrink = 0.5;
  double max_step = 1e8;
  double min_step = 1e-14;
  double stall_rel_improvement = 1e-10;
  int stall_window = 50;
  // Trial steps whose forward integration drifts off the unit sphere by more
  // than this are rejected: a fixed-step explicit scheme pushed into its
  // unstable regime stays finite but meaningless, and the cost it reports
  // would otherwise win the line search.
  double unitarity_tol = 1e-3;
  int restarts = 0;          // extra uniform random starts in [-2, 2]
  std::uint64_t seed = 0;
  double init_control_value = 1.0;
  std::optional<RealVector> initial_control;  // replaces the constant start
  double phase_init = 0.0;                    // CFI only
  bool phase_restart_at_half_pi = true;       // CFI only: also start at pi/2
  double cfi_clamp = 1e-10;
  int samples_per_interval = 8;   // diagnostics grid
  int substeps_per_interval = 0;  // 0 = default rule
};

struct OptimizationResult {
  ControlProtocol control;
  std::optional<double> phase;
  double objective = 0.0;
  DiagnosticsSeries diagnostics;
  int iterations = 0;
  std::vector<IterationRecord> history;
  std::string status;  // "phi_sd_tolerance" | "plateau" | "max_iters" | "stalled"
};

// One forward/backward pass at the given control: objective, diagnostics on the
// requested grid, and the terminal state. Shared by optimize() and the CLI.
struct ProtocolEvaluation {
  double objective = 0.0;
  double cost = 0.0;
  DiagnosticsSeries diagnostics;
  AugmentedState final_state;
};

inline ProtocolEvaluation evaluate_protocol(const ProblemSpec& spec, const TerminalCost& cost,
                                            const ControlProtocol& control, double phase,
                                            int samples_per_interval = 8,
                                            int substeps_override = 0) {
  const SpinOperators ops = build_operators(spec.n_spins);
  const AugmentedState init = initial_augmented_state(spec.n_spins);
  const SampledTrajectory fwd =
      evolve_forward(spec, control, init, samples_per_interval, substeps_override);
  const AugmentedState final_state = fwd.back();
  const CostatePair bc = cost.boundary(final_state, phase);
  const SampledCostateTrajectory bwd =
      evolve_costate_backward(spec, control, bc, samples_per_interval, substeps_override);
  ProtocolEvaluation ev;
  ev.diagnostics.times = fwd.times;
  ev.diagnostics.phi = switching_function(fwd, bwd, ops);
  ev.diagnostics.hc = control_hamiltonian(fwd, bwd, ops, spec, control);
  std::tie(ev.diagnostics.phi_mean, ev.diagnostics.phi_sd) =
      phi_statistics(ev.diagnostics.phi, control.t_final);
  ev.cost = cost.cost(final_state, phase);
  ev.objective = cost.objective_from_cost(ev.cost);
  ev.final_state = final_state;
  return ev;
}

namespace detail {

struct DescentOutcome {
  RealVector control;
  double phase = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<IterationRecord> history;
  std::string status = "max_iters";
};

// Projected gradient descent with Armijo backtracking on one start.
inline DescentOutcome descend(const ProblemSpec& spec, const TerminalCost& cost,
                              const OptimizerOptions& opts, RealVector omega_values,
                              double phase) {
  const int n_int = opts.n_intervals;
  ControlProtocol control{n_int, spec.t_final, RealVector()};
  const double dt = spec.t_final / n_int;
  const int n_sub = resolve_substeps(spec, n_int, opts.samples_per_interval,
                                     opts.substeps_per_interval);
  const AugmentedState init = initial_augmented_state(spec.n_spins);
  const SpinOperators ops = build_operators(spec.n_spins);

  if (spec.u_max) omega_values = project_control(omega_values, *spec.u_max);

  // Numeric blow-ups from overly aggressive trial steps surface as an infinite
  // cost so the backtracking loop rejects the step and halves gamma. This
  // covers both outright non-finite integrations and finite ones that left the
  // unit sphere (psi0 is unitary for every control).
  auto eval_cost = [&](const RealVector& values, double phi_val) {
    control.values = values;
    try {
      const AugmentedState final_state = evolve_final_state(spec, control, init, n_sub);
      if (std::abs(final_state.psi0.norm() - 1.0) > opts.unitarity_tol) {
        return std::numeric_limits<double>::infinity();
      }
      return cost.cost(final_state, phi_val);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  DescentOutcome out;
  out.control = omega_values;
  out.phase = phase;
  double current_cost = eval_cost(omega_values, phase);
  out.cost = current_cost;

  double step = opts.initial_step;
  double phase_step = opts.initial_step;
  std::vector<double> cost_log{current_cost};

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    // Gradient pass: sample on the substep grid for accurate interval quadrature.
    control.values = omega_values;
    const SampledTrajectory fwd = evolve_forward(spec, control, init, n_sub, n_sub);
    const AugmentedState final_state = fwd.back();
    const CostatePair bc = cost.boundary(final_state, phase);
    const SampledCostateTrajectory bwd = evolve_costate_backward(spec, control, bc, n_sub, n_sub);
    const RealVector phi = switching_function(fwd, bwd, ops);
    const RealVector grad = interval_gradients(phi, n_int, n_sub, dt);
    const auto [phi_mean, phi_sd] = phi_statistics(phi, spec.t_final);

    if (phi_sd < opts.tol_phi_sd) {
      out.iterations = iter - 1;
      out.status = "phi_sd_tolerance";
      break;
    }

    // Backtracking line search on the control update.
    double gamma = std::min(step * 2.0, opts.max_step);
    bool accepted = false;
    RealVector candidate;
    double candidate_cost = 0.0;
    while (gamma >= opts.min_step) {
      candidate = omega_values - gamma * grad;
      if (spec.u_max) candidate = project_control(candidate, *spec.u_max);
      const double predicted = grad.dot(candidate - omega_values);  // <= 0
      candidate_cost = eval_cost(candidate, phase);
      if (std::isfinite(candidate_cost) &&
          candidate_cost <= current_cost + opts.armijo_c1 * predicted && predicted < 0.0) {
        accepted = true;
        break;
      }
      gamma *= opts.backtrack_shrink;
    }
    if (!accepted) {
      out.iterations = iter - 1;
      out.status = "stalled";
      break;
    }
    omega_values = candidate;
    current_cost = candidate_cost;
    step = gamma;

    // CFI: one phase ascent step per control step, same backtracking rule.
    if (cost.uses_phase()) {
      control.values = omega_values;
      const AugmentedState state_now = evolve_final_state(spec, control, init, n_sub);
      const double dphi = cost.phase_gradient(state_now, phase);
      double gp = std::min(phase_step * 2.0, opts.max_step);
      while (gp >= opts.min_step) {
        const double phase_candidate = phase + gp * dphi;
        const double c = cost.cost(state_now, phase_candidate);
        if (std::isfinite(c) && c <= current_cost - opts.armijo_c1 * gp * dphi * dphi) {
          phase = phase_candidate;
          current_cost = c;
          phase_step = gp;
          break;
        }
        gp *= opts.backtrack_shrink;
      }
      if (gp < opts.min_step) phase_step = opts.initial_step;  // flat phase direction
    }

    if (current_cost < out.cost) {
      out.control = omega_values;
      out.phase = phase;
      out.cost = current_cost;
    }
    out.history.push_back(
        IterationRecord{iter, cost.objective_from_cost(current_cost), phi_sd, gamma});
    out.iterations = iter;
    cost_log.push_back(current_cost);

    if (static_cast<int>(cost_log.size()) > opts.stall_window) {
      const double then = cost_log[cost_log.size() - 1 - opts.stall_window];
      const double scale = std::max(1.0, std::abs(current_cost));
      if (std::abs(then - current_cost) < opts.stall_rel_improvement * scale) {
        out.status = "plateau";
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

// Gradient-descent optimization of a piecewise-constant control (and, for CFI,
// the measurement phase). Runs the default start plus opts.restarts random
// starts and returns the best iterate found.
inline OptimizationResult optimize(const ProblemSpec& spec, const CostKind& kind,
                                   const OptimizerOptions& opts) {
  validate(spec);
  if (opts.n_intervals < 1) throw std::invalid_argument("optimize: n_intervals must be >= 1");
  if (opts.max_iters < 1) throw std::invalid_argument("optimize: max_iters must be >= 1");
  const TerminalCost cost(spec.n_spins, kind, opts.cfi_clamp);

  std::vector<RealVector> control_starts;
  if (opts.initial_control) {
    if (opts.initial_control->size() != opts.n_intervals) {
      throw std::invalid_argument("optimize: initial_control length must equal n_intervals");
    }
    control_starts.push_back(*opts.initial_control);
  } else {
    control_starts.push_back(RealVector::Constant(opts.n_intervals, opts.init_control_value));
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int r = 0; r < opts.restarts; ++r) {
    RealVector v(opts.n_intervals);
    for (int i = 0; i < opts.n_intervals; ++i) v[i] = uni(rng);
    control_starts.push_back(std::move(v));
  }
  std::vector<double> phase_starts{CostKind::normalize_phase(opts.phase_init)};
  if (cost.uses_phase() && opts.phase_restart_at_half_pi) {
    const double half_pi = CostKind::normalize_phase(0.5 * std::numbers::pi);
    if (std::abs(half_pi - phase_starts[0]) > 1e-12) phase_starts.push_back(half_pi);
  }

  detail::DescentOutcome best;
  bool have_best = false;
  for (const RealVector& c0 : control_starts) {
    for (double p0 : phase_starts) {
      detail::DescentOutcome outcome = detail::descend(spec, cost, opts, c0, p0);
      if (!have_best || outcome.cost < best.cost) {
        best = std::move(outcome);
        have_best = true;
      }
    }
  }

  OptimizationResult result;
  result.control = ControlProtocol{opts.n_intervals, spec.t_final, best.control};
  if (cost.uses_phase()) result.phase = CostKind::normalize_phase(best.phase);
  result.iterations = best.iterations;
  result.history = std::move(best.history);
  result.status = best.status;

  // Final evaluation on the diagnostics grid with the same integrator settings.
  const ProtocolEvaluation ev =
      evaluate_protocol(spec, cost, result.control, best.phase, opts.samples_per_interval,
                        opts.substeps_per_interval);
  result.objective = ev.objective;
  result.diagnostics = ev.diagnostics;
  return result;
}

// Dimensionless form of a control: s = N chi t on [0, N chi T], values divided
// by N chi. boundaries has n_intervals + 1 entries.
struct RescaledControl {
  RealVector s_boundaries;
  RealVector values;
};

inline RescaledControl dimensionless_rescale(const ControlProtocol& control,
                                             const ProblemSpec& spec) {
  const double scale = spec.n_spins * spec.chi;
  if (!(scale > 0.0)) {
    throw std::invalid_argument("dimensionless_rescale: N*chi must be positive");
  }
  RescaledControl out;
  out.s_boundaries.resize(control.n_intervals + 1);
  const double ds = scale * control.t_final / control.n_intervals;
  for (int i = 0; i <= control.n_intervals; ++i) out.s_boundaries[i] = ds * i;
  out.values = control.values / scale;
  return out;
}

inline ControlProtocol undo_rescale(const RescaledControl& rescaled, const ProblemSpec& spec) {
  const double scale = spec.n_spins * spec.chi;
  if (!(scale > 0.0)) throw std::invalid_argument("undo_rescale: N*chi must be positive");
  ControlProtocol control;
  control.n_intervals = static_cast<int>(rescaled.values.size());
  control.t_final = rescaled.s_boundaries[rescaled.s_boundaries.size() - 1] / scale;
  control.values = rescaled.values * scale;
  return control;
}

}  // namespace pmpm
