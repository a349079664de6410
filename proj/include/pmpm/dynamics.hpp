#pragma once

#include "pmpm/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pmpm {

// Physical instance: H = chi J_z^2 + omega J_z + Omega(t) J_x on [0, t_final].
// omega is the estimand; optimizations run at omega = 0.
struct ProblemSpec {
  int n_spins = 1;
  double chi = 0.0;
  double omega = 0.0;
  double t_final = 1.0;
  std::optional<double> u_max;
};

inline void validate(const ProblemSpec& spec) {
  if (spec.n_spins < 1) throw std::invalid_argument("ProblemSpec: n_spins must be >= 1");
  if (!(spec.t_final > 0.0) || !std::isfinite(spec.t_final)) {
    throw std::invalid_argument("ProblemSpec: t_final must be positive and finite");
  }
  if (!std::isfinite(spec.chi) || !std::isfinite(spec.omega)) {
    throw std::invalid_argument("ProblemSpec: chi and omega must be finite");
  }
  if (spec.u_max && !(*spec.u_max > 0.0)) {
    throw std::invalid_argument("ProblemSpec: u_max must be positive when set");
  }
}

// Piecewise-constant control: values[i] applies on [i dt, (i+1) dt), dt = t_final / n_intervals.
struct ControlProtocol {
  int n_intervals = 1;
  double t_final = 1.0;
  RealVector values;

  double interval_length() const { return t_final / n_intervals; }
};

inline ControlProtocol constant_control(double value, int n_intervals, double t_final) {
  if (n_intervals < 1) throw std::invalid_argument("constant_control: n_intervals must be >= 1");
  ControlProtocol c;
  c.n_intervals = n_intervals;
  c.t_final = t_final;
  c.values = RealVector::Constant(n_intervals, value);
  return c;
}

inline void validate(const ControlProtocol& control, const ProblemSpec& spec) {
  if (control.n_intervals < 1 || control.values.size() != control.n_intervals) {
    throw std::invalid_argument("ControlProtocol: values length must equal n_intervals");
  }
  if (control.t_final != spec.t_final) {
    throw std::invalid_argument("ControlProtocol: t_final differs from ProblemSpec t_final");
  }
  if (!control.values.allFinite()) {
    throw std::invalid_argument("ControlProtocol: control values must be finite");
  }
}

// (psi0, psi1) = (state, parameter-derivative state).
struct AugmentedState {
  ComplexVector psi0;
  ComplexVector psi1;
};

// Adjoint variables paired with (psi0, psi1).
struct CostatePair {
  ComplexVector pi0;
  ComplexVector pi1;
};

inline AugmentedState initial_augmented_state(int n_spins) {
  AugmentedState init;
  init.psi0 = coherent_x_state(n_spins);
  init.psi1 = ComplexVector::Zero(n_spins + 1);
  return init;
}

// Uniformly sampled trajectory on [0, t_final]: samples_per_interval samples per
// control interval plus the initial point. Column j of data is the stacked pair
// [top; bottom] at times[j].
template <class StateT>
struct Sampled {
  RealVector times;
  ComplexMatrix data;  // 2*dim x n_samples
  int samples_per_interval = 0;
  int dim = 0;

  Eigen::Index n_samples() const { return times.size(); }
  StateT state_at(Eigen::Index j) const {
    return StateT{data.col(j).head(dim), data.col(j).tail(dim)};
  }
  StateT back() const { return state_at(n_samples() - 1); }
};

using SampledTrajectory = Sampled<AugmentedState>;
using SampledCostateTrajectory = Sampled<CostatePair>;

namespace detail {

// Derivative of the stacked pair y = [y0; y1] under the twist-and-turn generator.
// Forward block structure:   d/dt (psi0, psi1) = (-iH psi0, -iJz psi0 - iH psi1)
// Costate block structure:   d/dt (pi0,  pi1)  = (-iH pi0 - iJz pi1, -iH pi1)
// H = diag(chi m^2 + omega m) + u J_x with J_x tridiagonal.
template <bool Costate>
struct PairGenerator {
  const SpinOperators* ops;
  double chi;
  double omega;
  double u = 0.0;

  void operator()(const ComplexVector& y, ComplexVector& dy) const {
    const int d = ops->dim;
    const double* mz = ops->jz.data();
    const double* m2 = ops->jz2.data();
    const double* ox = ops->jx_offdiag.data();
    const Complex* y0 = y.data();
    const Complex* y1 = y.data() + d;
    Complex* d0 = dy.data();
    Complex* d1 = dy.data() + d;
    constexpr Complex minus_i(0.0, -1.0);
    for (int i = 0; i < d; ++i) {
      const double diag = chi * m2[i] + omega * mz[i];
      Complex h0 = diag * y0[i];
      Complex h1 = diag * y1[i];
      if (i > 0) {
        const double c = u * ox[i - 1];
        h0 += c * y0[i - 1];
        h1 += c * y1[i - 1];
      }
      if (i + 1 < d) {
        const double c = u * ox[i];
        h0 += c * y0[i + 1];
        h1 += c * y1[i + 1];
      }
      if constexpr (Costate) {
        d0[i] = minus_i * (h0 + mz[i] * y1[i]);
        d1[i] = minus_i * h1;
      } else {
        d0[i] = minus_i * h0;
        d1[i] = minus_i * (h1 + mz[i] * y0[i]);
      }
    }
  }
};

// Single-block unitary derivative: dy = -iH y.
struct UnitaryGenerator {
  const SpinOperators* ops;
  double chi;
  double omega;
  double u = 0.0;

  void operator()(const ComplexVector& y, ComplexVector& dy) const {
    const int d = ops->dim;
    const double* mz = ops->jz.data();
    const double* m2 = ops->jz2.data();
    const double* ox = ops->jx_offdiag.data();
    const Complex* yv = y.data();
    Complex* dv = dy.data();
    constexpr Complex minus_i(0.0, -1.0);
    for (int i = 0; i < d; ++i) {
      Complex h = (chi * m2[i] + omega * mz[i]) * yv[i];
      if (i > 0) h += u * ox[i - 1] * yv[i - 1];
      if (i + 1 < d) h += u * ox[i] * yv[i + 1];
      dv[i] = minus_i * h;
    }
  }
};

struct Rk5Workspace {
  ComplexVector k1, k2, k3, k4, k5, k6, tmp;
  void resize(Eigen::Index n) {
    for (ComplexVector* v : {&k1, &k2, &k3, &k4, &k5, &k6, &tmp}) v->resize(n);
  }
};

// Fixed-step propagation with the 5th-order Dormand-Prince formula (6 stages).
// h may be negative (backward-in-time integration).
template <class Deriv>
void rk5_fixed_steps(const Deriv& f, ComplexVector& y, double h, int n_steps, Rk5Workspace& ws) {
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                   a54 = -212.0 / 729.0;
  constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                   a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                   b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  for (int s = 0; s < n_steps; ++s) {
    f(y, ws.k1);
    ws.tmp = y + (h * a21) * ws.k1;
    f(ws.tmp, ws.k2);
    ws.tmp = y + (h * a31) * ws.k1 + (h * a32) * ws.k2;
    f(ws.tmp, ws.k3);
    ws.tmp = y + (h * a41) * ws.k1 + (h * a42) * ws.k2 + (h * a43) * ws.k3;
    f(ws.tmp, ws.k4);
    ws.tmp = y + (h * a51) * ws.k1 + (h * a52) * ws.k2 + (h * a53) * ws.k3 + (h * a54) * ws.k4;
    f(ws.tmp, ws.k5);
    ws.tmp = y + (h * a61) * ws.k1 + (h * a62) * ws.k2 + (h * a63) * ws.k3 + (h * a64) * ws.k4 +
             (h * a65) * ws.k5;
    f(ws.tmp, ws.k6);
    y += (h * b1) * ws.k1 + (h * b3) * ws.k3 + (h * b4) * ws.k4 + (h * b5) * ws.k5 +
         (h * b6) * ws.k6;
  }
}

inline ComplexVector stack_pair(const ComplexVector& top, const ComplexVector& bottom) {
  ComplexVector y(top.size() + bottom.size());
  y.head(top.size()) = top;
  y.tail(bottom.size()) = bottom;
  return y;
}

}  // namespace detail

// Default substep count per control interval: substep length at most
// 0.002/(1 + N|chi|), never fewer than 16 substeps, rounded up to a multiple of
// samples_per_interval so that sample times land exactly on substep boundaries.
inline int default_substeps(const ProblemSpec& spec, int n_intervals, int samples_per_interval) {
  const double dt = spec.t_final / n_intervals;
  const double h_max = 0.002 / (1.0 + std::abs(spec.chi) * spec.n_spins);
  int n = std::max(16, static_cast<int>(std::ceil(dt / h_max)));
  const int k = std::max(1, samples_per_interval);
  n = ((n + k - 1) / k) * k;
  return n;
}

inline int resolve_substeps(const ProblemSpec& spec, int n_intervals, int samples_per_interval,
                            int substeps_override) {
  if (substeps_override <= 0) return default_substeps(spec, n_intervals, samples_per_interval);
  const int k = std::max(1, samples_per_interval);
  return ((substeps_override + k - 1) / k) * k;
}

namespace detail {

template <bool Costate>
Sampled<std::conditional_t<Costate, CostatePair, AugmentedState>> evolve_sampled(
    const ProblemSpec& spec, const ControlProtocol& control, const ComplexVector& y_init,
    int samples_per_interval, int substeps_override) {
  validate(spec);
  validate(control, spec);
  const int dim = spec.n_spins + 1;
  if (y_init.size() != 2 * dim) {
    throw std::invalid_argument("evolve: state dimension does not match n_spins");
  }
  if (!y_init.allFinite()) throw std::invalid_argument("evolve: non-finite initial state");
  if (samples_per_interval < 1) {
    throw std::invalid_argument("evolve: samples_per_interval must be >= 1");
  }
  const int n_int = control.n_intervals;
  const int k = samples_per_interval;
  const int n_sub = resolve_substeps(spec, n_int, k, substeps_override);
  const int stride = n_sub / k;
  const double dt = control.interval_length();
  const double h = dt / n_sub;

  Sampled<std::conditional_t<Costate, CostatePair, AugmentedState>> traj;
  traj.samples_per_interval = k;
  traj.dim = dim;
  const Eigen::Index n_samples = static_cast<Eigen::Index>(k) * n_int + 1;
  traj.times.resize(n_samples);
  const double sample_dt = control.t_final / (static_cast<double>(k) * n_int);
  for (Eigen::Index j = 0; j < n_samples; ++j) traj.times[j] = sample_dt * j;
  traj.times[n_samples - 1] = control.t_final;
  traj.data.resize(2 * dim, n_samples);

  PairGenerator<Costate> gen{nullptr, spec.chi, spec.omega, 0.0};
  SpinOperators ops = build_operators(spec.n_spins);
  gen.ops = &ops;
  Rk5Workspace ws;
  ws.resize(2 * dim);
  ComplexVector y = y_init;

  if constexpr (!Costate) {
    traj.data.col(0) = y;
    for (int i = 0; i < n_int; ++i) {
      gen.u = control.values[i];
      for (int g = 0; g < k; ++g) {
        rk5_fixed_steps(gen, y, h, stride, ws);
        traj.data.col(static_cast<Eigen::Index>(i) * k + g + 1) = y;
      }
    }
  } else {
    // Backward in time from t_final to 0 on the reversed grid; the stored
    // samples align exactly with the forward samples.
    traj.data.col(n_samples - 1) = y;
    for (int i = n_int - 1; i >= 0; --i) {
      gen.u = control.values[i];
      for (int g = k - 1; g >= 0; --g) {
        rk5_fixed_steps(gen, y, -h, stride, ws);
        traj.data.col(static_cast<Eigen::Index>(i) * k + g) = y;
      }
    }
  }
  if (!y.allFinite()) throw std::runtime_error("evolve: integration produced non-finite values");
  return traj;
}

}  // namespace detail

inline SampledTrajectory evolve_forward(const ProblemSpec& spec, const ControlProtocol& control,
                                        const AugmentedState& init, int samples_per_interval = 8,
                                        int substeps_override = 0) {
  return detail::evolve_sampled<false>(spec, control, detail::stack_pair(init.psi0, init.psi1),
                                       samples_per_interval, substeps_override);
}

inline SampledCostateTrajectory evolve_costate_backward(const ProblemSpec& spec,
                                                        const ControlProtocol& control,
                                                        const CostatePair& terminal,
                                                        int samples_per_interval = 8,
                                                        int substeps_override = 0) {
  return detail::evolve_sampled<true>(spec, control, detail::stack_pair(terminal.pi0, terminal.pi1),
                                      samples_per_interval, substeps_override);
}

// Final augmented state only (no trajectory storage); identical stepping to
// evolve_forward with the same substep count.
inline AugmentedState evolve_final_state(const ProblemSpec& spec, const ControlProtocol& control,
                                         const AugmentedState& init, int substeps_override = 0) {
  validate(spec);
  validate(control, spec);
  const int dim = spec.n_spins + 1;
  if (init.psi0.size() != dim || init.psi1.size() != dim) {
    throw std::invalid_argument("evolve_final_state: state dimension does not match n_spins");
  }
  const int n_sub = resolve_substeps(spec, control.n_intervals, 1, substeps_override);
  const double h = control.interval_length() / n_sub;
  SpinOperators ops = build_operators(spec.n_spins);
  detail::PairGenerator<false> gen{&ops, spec.chi, spec.omega, 0.0};
  detail::Rk5Workspace ws;
  ws.resize(2 * dim);
  ComplexVector y = detail::stack_pair(init.psi0, init.psi1);
  for (int i = 0; i < control.n_intervals; ++i) {
    gen.u = control.values[i];
    detail::rk5_fixed_steps(gen, y, h, n_sub, ws);
  }
  if (!y.allFinite()) {
    throw std::runtime_error("evolve_final_state: integration produced non-finite values");
  }
  return AugmentedState{y.head(dim), y.tail(dim)};
}

// psi0-only (unitary) evolution; used by finite-difference oracles and
// free-evolution cross-checks that must not touch the augmented machinery.
inline ComplexVector evolve_unitary_final(const ProblemSpec& spec, const ControlProtocol& control,
                                          const ComplexVector& psi0, int substeps_override = 0) {
  validate(spec);
  validate(control, spec);
  const int dim = spec.n_spins + 1;
  if (psi0.size() != dim) {
    throw std::invalid_argument("evolve_unitary_final: state dimension does not match n_spins");
  }
  const int n_sub = resolve_substeps(spec, control.n_intervals, 1, substeps_override);
  const double h = control.interval_length() / n_sub;
  SpinOperators ops = build_operators(spec.n_spins);
  detail::UnitaryGenerator gen{&ops, spec.chi, spec.omega, 0.0};
  detail::Rk5Workspace ws;
  ws.resize(dim);
  ComplexVector y = psi0;
  for (int i = 0; i < control.n_intervals; ++i) {
    gen.u = control.values[i];
    detail::rk5_fixed_steps(gen, y, h, n_sub, ws);
  }
  if (!y.allFinite()) {
    throw std::runtime_error("evolve_unitary_final: integration produced non-finite values");
  }
  return y;
}

// Generic fixed-step RK5 propagation of x' = G x with a constant dense generator.
inline ComplexVector propagate_interval(const ComplexMatrix& generator, const ComplexVector& state,
                                        double dt, int n_substeps) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate_interval: dt must be positive");
  if (n_substeps < 1) throw std::invalid_argument("propagate_interval: n_substeps must be >= 1");
  if (generator.rows() != generator.cols() || generator.rows() != state.size()) {
    throw std::invalid_argument("propagate_interval: generator/state dimension mismatch");
  }
  if (!generator.allFinite() || !state.allFinite()) {
    throw std::runtime_error("propagate_interval: non-finite input");
  }
  auto f = [&generator](const ComplexVector& y, ComplexVector& dy) {
    dy.noalias() = generator * y;
  };
  detail::Rk5Workspace ws;
  ws.resize(state.size());
  ComplexVector y = state;
  detail::rk5_fixed_steps(f, y, dt / n_substeps, n_substeps, ws);
  if (!y.allFinite()) throw std::runtime_error("propagate_interval: non-finite result");
  return y;
}

}  // namespace pmpm
