// Acceptance suite: end-to-end reproduction checks against the published
// twist-and-turn benchmarks plus the analytic/property gates. Prints one
// [PASS]/[FAIL] line per criterion and exits nonzero if any fail.
//
// Optimization runs use a coarsened fixed-step integrator for speed; every
// reported number is re-evaluated at (at least) the default substep rule.

#include "pmpm/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace pmpm;

namespace {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> g_results;

void record(const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back(CheckResult{name, pass, detail});
  std::fprintf(stderr, "  .. %s: %s\n", name.c_str(), pass ? "pass" : "FAIL");
}

std::string fmt(double x, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
  return buf;
}

// Coarsened substep count for optimization iterations: default/divisor, but
// never below the 16-per-interval floor.
int coarse_substeps(const ProblemSpec& spec, int n_intervals, int divisor) {
  const int dflt = default_substeps(spec, n_intervals, 1);
  return std::max(16, dflt / divisor);
}

// Fine substep count for reported evaluations: twice the default rule.
int fine_substeps(const ProblemSpec& spec, int n_intervals) {
  return 2 * default_substeps(spec, n_intervals, 1);
}

struct StageResult {
  int n_intervals = 0;
  double objective = 0.0;  // evaluated at fine substeps
  double phi_sd = 0.0;
  double phase = 0.0;
  ControlProtocol control;
  DiagnosticsSeries diagnostics;
};

struct ContinuationSettings {
  std::vector<int> stages{8, 16, 32, 64};
  int iters_first = 400;
  int iters_rest = 500;
  int restarts_first = 2;
  int coarsen = 4;
  double tol_phi_sd = 1e-4;
  std::uint64_t seed = 1;
  std::vector<double> init_values{1.0};  // constant starts tried at the first stage
  std::optional<RealVector> initial_control;  // overrides the constant starts
  double initial_phase = 0.0;
  bool phase_restarts = true;  // CFI: also try pi/2 at the first stage
};

// Optimizes one instance over a refinement ladder of interval counts,
// warm-starting every stage from the previous optimum.
std::vector<StageResult> continuation(const ProblemSpec& spec, const CostKind& kind,
                                      const ContinuationSettings& settings) {
  const TerminalCost cost(spec.n_spins, kind);
  std::vector<StageResult> out;
  std::optional<RealVector> warm = settings.initial_control;
  double warm_phase = settings.initial_phase;
  for (std::size_t s = 0; s < settings.stages.size(); ++s) {
    const int n_int = settings.stages[s];
    OptimizerOptions opts;
    opts.n_intervals = n_int;
    opts.max_iters = s == 0 ? settings.iters_first : settings.iters_rest;
    opts.tol_phi_sd = settings.tol_phi_sd;
    opts.restarts = s == 0 ? settings.restarts_first : 0;
    opts.seed = settings.seed;
    opts.substeps_per_interval = coarse_substeps(spec, n_int, settings.coarsen);
    opts.phase_init = warm_phase;
    opts.phase_restart_at_half_pi = settings.phase_restarts && s == 0;
    if (warm) {
      const int prev = static_cast<int>(warm->size());
      if (n_int % prev != 0) {
        throw std::invalid_argument("continuation: stage sizes must refine evenly");
      }
      const int factor = n_int / prev;
      RealVector up(n_int);
      for (int i = 0; i < n_int; ++i) up[i] = (*warm)[i / factor];
      opts.initial_control = up;
    }
    OptimizationResult result;
    if (!warm && settings.init_values.size() > 1) {
      // multi-start over constant controls at the first stage
      bool have = false;
      for (double v : settings.init_values) {
        OptimizerOptions o = opts;
        o.init_control_value = v;
        OptimizationResult r = optimize(spec, kind, o);
        if (!have || r.objective > result.objective) {
          result = std::move(r);
          have = true;
        }
      }
    } else {
      if (!warm) opts.init_control_value = settings.init_values.front();
      result = optimize(spec, kind, opts);
    }

    StageResult stage;
    stage.n_intervals = n_int;
    stage.control = result.control;
    stage.phase = result.phase.value_or(kind.phase);
    const ProtocolEvaluation ev = evaluate_protocol(spec, cost, result.control, stage.phase, 8,
                                                    fine_substeps(spec, n_int));
    stage.objective = ev.objective;
    stage.phi_sd = ev.diagnostics.phi_sd;
    stage.diagnostics = ev.diagnostics;
    warm = result.control.values;
    warm_phase = stage.phase;
    out.push_back(std::move(stage));
  }
  return out;
}

double phase_distance_mod_pi(double phase, double target) {
  const double pi = std::numbers::pi;
  double d = std::fmod(std::abs(phase - target), pi);
  return std::min(d, pi - d);
}

// ---------------------------------------------------------------------------
// criteria 1, 2, 7: Table 1 ladder for five instances; trend; strong twist

struct TableRow {
  int n_spins;
  double chi;
  double published_qfi;
  double published_phi_sd;
};

std::vector<std::vector<StageResult>> g_table_runs;  // shared with criteria 2 and 7
const std::vector<TableRow> kTableRows = {
    {10, 4.0, 88.15, 2.10e-3},  {20, 1.0, 273.28, 5.55e-3}, {20, 2.0, 331.88, 1.00e-2},
    {20, 4.0, 364.60, 1.08e-2}, {30, 1.0, 661.78, 2.86e-2},
};

void criterion_1_table() {
  bool all = true;
  std::string detail;
  for (const TableRow& row : kTableRows) {
    const ProblemSpec spec{row.n_spins, row.chi, 0.0, 1.0, std::nullopt};
    ContinuationSettings settings;
    settings.iters_first = 400;
    settings.iters_rest = 600;
    const auto t0 = std::chrono::steady_clock::now();
    g_table_runs.push_back(continuation(spec, CostKind::qfi(), settings));
    const StageResult& last = g_table_runs.back().back();
    const double mins =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    const double bound = static_cast<double>(row.n_spins) * row.n_spins;  // N^2 T^2, T=1
    const bool ok = last.objective >= 0.98 * row.published_qfi &&
                    last.objective <= bound + 1e-6 * bound &&
                    last.phi_sd <= 10.0 * row.published_phi_sd;
    all = all && ok;
    detail += "(" + std::to_string(row.n_spins) + "," + fmt(row.chi, 3) +
              "): QFI=" + fmt(last.objective) + "/" + fmt(row.published_qfi) +
              " phi_sd=" + fmt(last.phi_sd, 3) + (ok ? "" : " <-- FAIL") + "; ";
    std::fprintf(stderr, "     table row (%d,%g) done in %.1f min, QFI %.4f, phi_sd %.2e\n",
                 row.n_spins, row.chi, mins, last.objective, last.phi_sd);
  }
  record("criterion 1: Table 1 QFI at N_t=64 within 2% of published, Phi_sd <= 10x", all, detail);
}

void criterion_2_trend() {
  // (20,4) is row index 3 of the shared ladder runs.
  const std::vector<StageResult>& ladder = g_table_runs[3];
  bool qfi_monotone = true, sd_decreasing = true;
  std::string detail = "QFI: ";
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    detail += fmt(ladder[i].objective) + (i + 1 < ladder.size() ? " <= " : "");
    if (i > 0 && ladder[i].objective < ladder[i - 1].objective - 1e-9) qfi_monotone = false;
  }
  detail += "; phi_sd: ";
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    detail += fmt(ladder[i].phi_sd, 3) + (i + 1 < ladder.size() ? " > " : "");
    if (i > 0 && ladder[i].phi_sd >= ladder[i - 1].phi_sd) sd_decreasing = false;
  }
  record("criterion 2: (20,4) QFI non-decreasing and Phi_sd decreasing over N_t in {8,16,32,64}",
         qfi_monotone && sd_decreasing, detail);
}

void criterion_7_strong_twist() {
  const StageResult& best = g_table_runs[3].back();  // (20,4) at N_t=64
  const ProblemSpec spec{20, 4.0, 0.0, 1.0, std::nullopt};
  const double threshold = 0.05 * 20 * 4.0;
  const ControlProtocol& control = best.control;
  const double dt = control.interval_length();

  // Latest time after which every control value stays within the threshold.
  int off_index = control.n_intervals;
  for (int i = control.n_intervals - 1; i >= 0; --i) {
    if (std::abs(control.values[i]) > threshold) break;
    off_index = i;
  }
  const double t_off = off_index * dt;
  bool tail_quiet = true;
  for (int i = 0; i < control.n_intervals; ++i) {
    if (i * dt >= 0.25 && std::abs(control.values[i]) > threshold) tail_quiet = false;
  }

  // Overlap with the Heisenberg-limit state at the switch-off sample.
  const SampledTrajectory traj =
      evolve_forward(spec, control, initial_augmented_state(20), 8,
                     fine_substeps(spec, control.n_intervals));
  const ComplexVector hl = hl_state(20);
  Eigen::Index snap = 0;
  for (Eigen::Index j = 0; j < traj.n_samples(); ++j) {
    if (traj.times[j] <= t_off + 1e-12) snap = j;
  }
  const double overlap = std::abs(hl.dot(traj.state_at(snap).psi0));

  const bool ok = tail_quiet && t_off <= 0.25 + 1e-12 && overlap >= 0.9;
  record("criterion 7: (20,4) control switches off by t=0.25 with |<HL|psi>| >= 0.9",
         ok, "t_off=" + fmt(t_off, 4) + " overlap=" + fmt(overlap, 4) +
                 " tail_quiet=" + (tail_quiet ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// criterion 3: constrained controls at (100, 0.1), N_t = 100

void criterion_3_constrained() {
  const ProblemSpec base{100, 0.1, 0.0, 1.0, std::nullopt};
  const std::vector<double> published{2895.0, 2869.9, 2431.1, 1347.5};
  const std::vector<double> bounds{0.0, 6.0, 4.0, 2.0};  // 0 = unconstrained

  // Unconstrained optimum via a short refinement ladder.
  ContinuationSettings settings;
  settings.stages = {25, 50, 100};
  settings.iters_first = 300;
  settings.iters_rest = 400;
  settings.coarsen = 2;
  const std::vector<StageResult> ladder = continuation(base, CostKind::qfi(), settings);
  const StageResult& unconstrained = ladder.back();

  std::vector<double> achieved{unconstrained.objective};
  bool sign_ok = true;
  std::string detail = "QFI(none)=" + fmt(unconstrained.objective);
  for (std::size_t b = 1; b < bounds.size(); ++b) {
    ProblemSpec spec = base;
    spec.u_max = bounds[b];
    OptimizerOptions opts;
    opts.n_intervals = 100;
    opts.max_iters = 400;
    opts.tol_phi_sd = 1e-4;
    opts.substeps_per_interval = coarse_substeps(spec, 100, 2);
    opts.initial_control = project_control(unconstrained.control.values, bounds[b]);
    const OptimizationResult result = optimize(spec, CostKind::qfi(), opts);
    const TerminalCost cost(100, CostKind::qfi());
    const ProtocolEvaluation ev =
        evaluate_protocol(spec, cost, result.control, 0.0, 8, fine_substeps(spec, 100));
    achieved.push_back(ev.objective);
    detail += " QFI(u=" + fmt(bounds[b], 2) + ")=" + fmt(ev.objective);

    // On saturated intervals the switching function has the opposite sign.
    const RealVector phi_bar = interval_gradients(ev.diagnostics.phi, 100, 8, 1.0);
    const double phi_scale = phi_bar.cwiseAbs().maxCoeff();
    for (int i = 0; i < 100; ++i) {
      if (std::abs(result.control.values[i]) >= bounds[b] - 1e-12 &&
          std::abs(phi_bar[i]) > 1e-6 * phi_scale) {
        if (phi_bar[i] * result.control.values[i] > 0.0) sign_ok = false;
      }
    }
  }

  bool ok = sign_ok;
  for (std::size_t b = 0; b < published.size(); ++b) {
    if (achieved[b] < 0.98 * published[b]) ok = false;
    if (b > 0 && achieved[b] >= achieved[b - 1]) ok = false;  // strictly ordered
  }
  detail += sign_ok ? "; bang signs opposite" : "; bang sign check FAILED";
  record("criterion 3: (100,0.1) constrained QFI ladder within 2%, ordered, bang signs opposite",
         ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 4: CFI optima

void criterion_4_cfi() {
  bool ok = true;
  std::string detail;
  {
    // Small instance: direct optimization at N_t = 64 with a few constant
    // starts (the flat Omega = 1 start sits in a weak local basin here).
    const ProblemSpec spec{4, 1.0, 0.0, 1.0, std::nullopt};
    ContinuationSettings settings;
    settings.stages = {64};
    settings.iters_first = 800;
    settings.coarsen = 2;
    settings.tol_phi_sd = 0.0;
    settings.restarts_first = 0;
    settings.init_values = {1.0, 2.0, 4.0};
    // F_C vanishes identically at phi = 0 by z-parity, so the phase ascent
    // needs a symmetry-broken start; pi/2 is tried as well.
    settings.initial_phase = 0.05;
    const std::vector<StageResult> ladder = continuation(spec, CostKind::cfi(0.05), settings);
    const StageResult& last = ladder.back();
    const double dist = phase_distance_mod_pi(last.phase, 0.5 * std::numbers::pi);
    const bool this_ok = last.objective >= 0.98 * 8.19 && dist <= 0.1;
    ok = ok && this_ok;
    detail += "(4,1): CFI=" + fmt(last.objective) + "/8.19 phase_dist(pi/2)=" + fmt(dist, 3) +
              (this_ok ? "" : " <-- FAIL") + "; ";
  }
  {
    // Large instance: the phase-0 J_x measurement nearly saturates the quantum
    // bound, so the CFI ascent is warm-started from the QFI optimum.
    const ProblemSpec spec{100, 0.1, 0.0, 1.0, std::nullopt};
    ContinuationSettings qfi_settings;
    qfi_settings.stages = {16, 32, 64};
    qfi_settings.iters_first = 300;
    qfi_settings.iters_rest = 400;
    qfi_settings.coarsen = 2;
    const std::vector<StageResult> qfi_ladder =
        continuation(spec, CostKind::qfi(), qfi_settings);

    ContinuationSettings settings;
    settings.stages = {64};
    settings.iters_first = 800;
    settings.coarsen = 2;
    settings.tol_phi_sd = 0.0;
    settings.initial_control = qfi_ladder.back().control.values;
    settings.initial_phase = 0.05;  // symmetry-broken; the ascent drives phi -> 0+
    settings.phase_restarts = true;
    const std::vector<StageResult> ladder = continuation(spec, CostKind::cfi(0.05), settings);
    const StageResult& last = ladder.back();
    const double dist = phase_distance_mod_pi(last.phase, 0.0);
    const bool this_ok = last.objective >= 0.98 * 2867.5 && dist <= 0.1;
    ok = ok && this_ok;
    detail += "(100,0.1): CFI=" + fmt(last.objective) + "/2867.5 phase_dist(0)=" + fmt(dist, 3) +
              (this_ok ? "" : " <-- FAIL");
  }
  record("criterion 4: CFI optima within 2% of published with the published phase offsets", ok,
         detail);
}

// ---------------------------------------------------------------------------
// criterion 5: analytic limits

void criterion_5_limits() {
  bool ok = true;
  std::string detail;
  for (int n : {2, 10, 50}) {
    for (double t_final : {1.0, 0.7}) {
      const ProblemSpec spec{n, 1.0, 0.0, t_final, std::nullopt};
      const ControlProtocol zero = constant_control(0.0, 4, t_final);
      AugmentedState hl_init{hl_state(n), ComplexVector::Zero(n + 1)};
      const double hl_qfi = qfi_value(evolve_final_state(spec, zero, hl_init));
      const double hl_expect = static_cast<double>(n) * n * t_final * t_final;
      if (std::abs(hl_qfi - hl_expect) > 1e-6 * hl_expect) ok = false;

      const ProblemSpec free_spec{n, 0.0, 0.0, t_final, std::nullopt};
      const double snl_qfi =
          qfi_value(evolve_final_state(free_spec, zero, initial_augmented_state(n)));
      const double snl_expect = static_cast<double>(n) * t_final * t_final;
      if (std::abs(snl_qfi - snl_expect) > 1e-6 * snl_expect) ok = false;
      if (n == 50 && t_final == 1.0) {
        detail = "N=50: HL " + fmt(hl_qfi, 10) + "/" + fmt(hl_expect, 10) + ", SNL " +
                 fmt(snl_qfi, 10) + "/" + fmt(snl_expect, 10);
      }
    }
  }
  record("criterion 5: free-evolution QFI hits the Heisenberg and shot-noise limits", ok, detail);
}

// ---------------------------------------------------------------------------
// criterion 6: property suite

void criterion_6_properties() {
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);

  // (a) psi1 vs finite differences at delta = 1e-4.
  {
    const ProblemSpec spec{10, 4.0, 0.0, 1.0, std::nullopt};
    ControlProtocol control{8, 1.0, RealVector(8)};
    for (int i = 0; i < 8; ++i) control.values[i] = uni(rng);
    const AugmentedState out = evolve_final_state(spec, control, initial_augmented_state(10));
    const ComplexVector fd = fd_parameter_derivative(spec, control, 1e-4);
    const double rel = (out.psi1 - fd).norm() / out.psi1.norm();
    ok = ok && rel <= 1e-6;
    detail += "psi1-fd=" + fmt(rel, 3);
  }

  // (b) pairing invariant and (e) norm/orthogonality on random trajectories.
  {
    double max_drift = 0.0, max_norm_err = 0.0, max_orth = 0.0;
    for (unsigned seed : {1u, 2u, 3u}) {
      std::mt19937_64 local(seed);
      std::uniform_real_distribution<double> cuni(-1.0, 1.0);
      const ProblemSpec spec{8, 2.0, 0.0, 1.0, std::nullopt};
      ControlProtocol control{6, 1.0, RealVector(6)};
      for (int i = 0; i < 6; ++i) control.values[i] = 2.0 * cuni(local);
      const SampledTrajectory fwd =
          evolve_forward(spec, control, initial_augmented_state(8), 8);
      CostatePair terminal;
      terminal.pi0.resize(9);
      terminal.pi1.resize(9);
      for (int i = 0; i < 9; ++i) {
        terminal.pi0[i] = Complex(cuni(local), cuni(local));
        terminal.pi1[i] = Complex(cuni(local), cuni(local));
      }
      const SampledCostateTrajectory bwd = evolve_costate_backward(spec, control, terminal, 8);
      const auto pairing = [](const CostatePair& pi, const AugmentedState& psi) {
        return pi.pi0.dot(psi.psi0) + pi.pi1.dot(psi.psi1);
      };
      const Complex ref = pairing(bwd.back(), fwd.back());
      for (Eigen::Index s = 0; s < fwd.n_samples(); ++s) {
        const AugmentedState st = fwd.state_at(s);
        max_drift = std::max(max_drift,
                             std::abs(pairing(bwd.state_at(s), st) - ref) /
                                 std::max(1.0, std::abs(ref)));
        max_norm_err = std::max(max_norm_err, std::abs(st.psi0.norm() - 1.0));
        max_orth = std::max(max_orth, std::abs(st.psi0.dot(st.psi1)));
      }
    }
    ok = ok && max_drift <= 1e-9 && max_norm_err <= 1e-9 && max_orth <= 1e-9;
    detail += " pairing=" + fmt(max_drift, 3) + " norm=" + fmt(max_norm_err, 3) +
              " orth=" + fmt(max_orth, 3);
  }

  // (c) switching-function gradients vs finite differences for all three costs.
  {
    double worst_spread = 0.0;
    bool prop_ok = true;
    const std::vector<std::tuple<int, int, unsigned>> instances{{6, 4, 5u}, {10, 8, 6u}};
    for (const auto& [n, n_int, seed] : instances) {
      const ProblemSpec spec{n, 2.0, 0.0, 1.0, std::nullopt};
      OracleSettings settings;
      const GradientCheckReport report = run_gradient_checks(spec, n_int, settings, seed);
      for (const CostGradientCheck& check : report.gradient_checks) {
        worst_spread = std::max(worst_spread, check.spread);
        prop_ok = prop_ok && check.pass && check.constant > 0.0;
      }
    }
    ok = ok && prop_ok;
    detail += " prop-spread=" + fmt(worst_spread, 3);
  }

  // (d) CFI <= QFI over at least 100 random controls.
  {
    const int n = 6;
    const Eigensystem eig = jx_eigensystem(n);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    bool cfi_ok = true;
    int count = 0;
    for (int trial = 0; trial < 120; ++trial) {
      const ProblemSpec spec{n, 0.5 + 0.3 * (trial % 7), 0.0, 0.8, std::nullopt};
      ControlProtocol control{4, 0.8, RealVector(4)};
      for (int i = 0; i < 4; ++i) control.values[i] = uni(rng);
      const AugmentedState out =
          evolve_final_state(spec, control, initial_augmented_state(n));
      const double q = qfi_value(out);
      const double c = cfi_value(measurement_distribution(out, eig, phase(rng)));
      if (c > q * (1.0 + 1e-6) + 1e-12) cfi_ok = false;
      ++count;
    }
    ok = ok && cfi_ok && count >= 100;
    detail += std::string(" cfi<=qfi(") + std::to_string(count) + ")=" +
              (cfi_ok ? "yes" : "NO");
  }

  // (f) fixed-step integrator order.
  {
    const SpinOperators ops = build_operators(4);
    ComplexMatrix gen = ComplexMatrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) gen(i, i) = Complex(0.0, -1.0) * ops.jz2[i];
    gen += Complex(0.0, -2.0) * ops.jx.cast<Complex>();
    ComplexVector state = coherent_x_state(4);
    const ComplexVector exact = propagate_interval(gen, state, 1.0, 4096);
    std::vector<double> lh, le;
    for (int nn : {6, 12, 24, 48}) {
      const double err = (propagate_interval(gen, state, 1.0, nn) - exact).norm();
      lh.push_back(std::log(1.0 / nn));
      le.push_back(std::log(err));
    }
    double mh = 0.0, me = 0.0;
    for (std::size_t i = 0; i < lh.size(); ++i) {
      mh += lh[i] / lh.size();
      me += le[i] / le.size();
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lh.size(); ++i) {
      num += (lh[i] - mh) * (le[i] - me);
      den += (lh[i] - mh) * (lh[i] - mh);
    }
    const double slope = num / den;
    ok = ok && slope >= 4.5 && slope <= 5.5;
    detail += " rk5-slope=" + fmt(slope, 3);
  }

  record("criterion 6: property suite (fd, pairing, gradients, cfi<=qfi, norms, rk5 order)", ok,
         detail);
}

// ---------------------------------------------------------------------------
// criterion 8: fidelity mode

void criterion_8_fidelity() {
  const ProblemSpec spec{20, 4.0, 0.0, 0.125, std::nullopt};
  const CostKind kind = CostKind::fidelity(hl_state(20));
  ContinuationSettings settings;
  settings.stages = {64};
  settings.iters_first = 2000;
  settings.coarsen = 2;
  settings.tol_phi_sd = 0.0;  // flat start; terminate on plateau or max_iters
  settings.restarts_first = 0;
  // the spec-default start plus one at the natural strong-twist control scale
  settings.init_values = {1.0, 20 * 4.0};
  const std::vector<StageResult> ladder = continuation(spec, kind, settings);
  const StageResult& last = ladder.back();
  const double overlap = std::sqrt(std::max(0.0, last.objective));
  const double hc_max = last.diagnostics.hc.maxCoeff();
  const bool ok = overlap >= 0.985 && hc_max < 0.0;
  record("criterion 8: fidelity mode (20,4,T=1/8) reaches |<HL|psi(T)>| >= 0.985 with H_c < 0",
         ok, "overlap=" + fmt(overlap, 5) + " max H_c=" + fmt(hc_max, 4));
}

// ---------------------------------------------------------------------------
// extra: dimensionless collapse of strong-twist optima

void extra_collapse() {
  // (20,2) comes from the shared Table 1 ladder (row 2); (40,1) is run here.
  const ControlProtocol& control_a = g_table_runs[2].back().control;
  const ProblemSpec spec_a{20, 2.0, 0.0, 1.0, std::nullopt};

  const ProblemSpec spec_b{40, 1.0, 0.0, 1.0, std::nullopt};
  ContinuationSettings settings;
  settings.iters_first = 300;
  settings.iters_rest = 500;
  const std::vector<StageResult> ladder = continuation(spec_b, CostKind::qfi(), settings);
  const ControlProtocol& control_b = ladder.back().control;

  const RescaledControl bar_a = dimensionless_rescale(control_a, spec_a);
  const RescaledControl bar_b = dimensionless_rescale(control_b, spec_b);
  // Both live on s in [0, 40] with 64 intervals; compare interval by interval.
  double sup = 0.0;
  for (int i = 0; i < 64; ++i) sup = std::max(sup, std::abs(bar_a.values[i] - bar_b.values[i]));
  record("extra: dimensionless controls of (20,2) and (40,1) collapse (sup diff <= 0.15)",
         sup <= 0.15, "sup|diff|=" + fmt(sup, 3));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) only.insert(argv[i]);
  const auto wants = [&only](const std::string& id) { return only.empty() || only.count(id); };

  const auto t0 = std::chrono::steady_clock::now();
  // Criteria 2, 7 and the collapse check reuse criterion 1's optimization runs.
  const bool need_table = wants("1") || wants("2") || wants("7") || wants("collapse");
  if (need_table) criterion_1_table();
  if (wants("2")) criterion_2_trend();
  if (wants("3")) criterion_3_constrained();
  if (wants("4")) criterion_4_cfi();
  if (wants("5")) criterion_5_limits();
  if (wants("6")) criterion_6_properties();
  if (wants("7")) criterion_7_strong_twist();
  if (wants("8")) criterion_8_fidelity();
  if (wants("collapse")) extra_collapse();
  const double mins =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

  bool all = true;
  for (const CheckResult& r : g_results) {
    std::printf("[%s] %s\n        %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    all = all && r.pass;
  }
  std::printf("%s (%d checks, %.1f min)\n", all ? "ALL PASSED" : "FAILURES PRESENT",
              static_cast<int>(g_results.size()), mins);
  return all ? 0 : 1;
}
