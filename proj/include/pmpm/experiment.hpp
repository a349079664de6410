#pragma once

#include "pmpm/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace pmpm {

// Configuration error that names the offending key.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& msg)
      : std::runtime_error("config key '" + k + "': " + msg), key(std::move(k)) {}
};

// Flat key=value experiment configuration. Every field is echoed into
// summary.json so a run's provenance is complete.
struct RunConfig {
  int n_spins = 10;
  double chi = 1.0;
  double omega = 0.0;
  double t_final = 1.0;
  int n_intervals = 64;
  std::string cost = "qfi";  // qfi | cfi | fidelity
  double u_max = 0.0;        // 0 disables the bound
  std::string target = "hl";  // hl | path to a custom state file (fidelity)
  double phase_init = 0.0;
  std::uint64_t seed = 0;
  int restarts = 0;
  double init_control_value = 1.0;
  double initial_step = 1.0;
  double tol_phi_sd = -1.0;  // <0: default by cost (1e-3 qfi/fidelity, 1e-2 cfi)
  int max_iters = 2000;
  int substeps = 0;  // 0 = default rule
  int samples_per_interval = 8;
  double cfi_clamp = 1e-10;
  double delta_omega = 1e-4;    // verify
  double delta_control = 1e-6;  // verify
  std::string output_dir;
};

namespace detail {

inline long long parse_ll(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
}

}  // namespace detail

inline void apply_config_entry(RunConfig& config, const std::string& key,
                               const std::string& value) {
  if (key == "n_spins") config.n_spins = static_cast<int>(detail::parse_ll(key, value));
  else if (key == "chi") config.chi = detail::parse_double(key, value);
  else if (key == "omega") config.omega = detail::parse_double(key, value);
  else if (key == "t_final") config.t_final = detail::parse_double(key, value);
  else if (key == "n_intervals") config.n_intervals = static_cast<int>(detail::parse_ll(key, value));
  else if (key == "cost") config.cost = value;
  else if (key == "u_max")
    config.u_max = (value == "inf" || value == "none") ? 0.0 : detail::parse_double(key, value);
  else if (key == "target") config.target = value;
  else if (key == "phase_init") config.phase_init = detail::parse_double(key, value);
  else if (key == "seed") config.seed = static_cast<std::uint64_t>(detail::parse_ll(key, value));
  else if (key == "restarts") config.restarts = static_cast<int>(detail::parse_ll(key, value));
  else if (key == "init_control_value") config.init_control_value = detail::parse_double(key, value);
  else if (key == "initial_step") config.initial_step = detail::parse_double(key, value);
  else if (key == "tol_phi_sd") config.tol_phi_sd = detail::parse_double(key, value);
  else if (key == "max_iters") config.max_iters = static_cast<int>(detail::parse_ll(key, value));
  else if (key == "substeps") config.substeps = static_cast<int>(detail::parse_ll(key, value));
  else if (key == "samples_per_interval")
    config.samples_per_interval = static_cast<int>(detail::parse_ll(key, value));
  else if (key == "cfi_clamp") config.cfi_clamp = detail::parse_double(key, value);
  else if (key == "delta_omega") config.delta_omega = detail::parse_double(key, value);
  else if (key == "delta_control") config.delta_control = detail::parse_double(key, value);
  else if (key == "output_dir") config.output_dir = value;
  else throw ConfigError(key, "unknown configuration key");
}

// Flat key=value file; '#' starts a comment, blank lines ignored.
inline RunConfig parse_config_file(const std::string& path, RunConfig config = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key=value, got '" + line + "'");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto kl = key.find_last_not_of(" \t");
    key = key.substr(0, kl == std::string::npos ? 0 : kl + 1);
    const auto vf = value.find_first_not_of(" \t");
    value = vf == std::string::npos ? "" : value.substr(vf);
    apply_config_entry(config, key, value);
  }
  return config;
}

inline void validate_config(const RunConfig& config) {
  if (config.n_spins < 1) throw ConfigError("n_spins", "must be >= 1");
  if (!(config.t_final > 0.0) || !std::isfinite(config.t_final))
    throw ConfigError("t_final", "must be positive and finite");
  if (!std::isfinite(config.chi)) throw ConfigError("chi", "must be finite");
  if (!std::isfinite(config.omega)) throw ConfigError("omega", "must be finite");
  if (config.n_intervals < 1) throw ConfigError("n_intervals", "must be >= 1");
  if (config.cost != "qfi" && config.cost != "cfi" && config.cost != "fidelity")
    throw ConfigError("cost", "must be one of qfi, cfi, fidelity");
  if (config.u_max < 0.0 || !std::isfinite(config.u_max))
    throw ConfigError("u_max", "must be positive, or 0/'none' for unconstrained");
  if (config.cost == "fidelity" && config.target.empty())
    throw ConfigError("target", "cost=fidelity requires a target");
  if (config.max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
  if (config.samples_per_interval < 1) throw ConfigError("samples_per_interval", "must be >= 1");
  if (config.restarts < 0) throw ConfigError("restarts", "must be >= 0");
  if (!(config.cfi_clamp > 0.0)) throw ConfigError("cfi_clamp", "must be positive");
  if (!(config.delta_omega > 0.0)) throw ConfigError("delta_omega", "must be positive");
  if (!(config.delta_control > 0.0)) throw ConfigError("delta_control", "must be positive");
  if (!std::isfinite(config.phase_init)) throw ConfigError("phase_init", "must be finite");
  if (!(config.initial_step > 0.0)) throw ConfigError("initial_step", "must be positive");
}

inline std::string resolve_output_dir(const RunConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("PMPM_OUTPUT_DIR"); env && *env) return env;
  throw ConfigError("output_dir", "not set and PMPM_OUTPUT_DIR is empty");
}

inline ProblemSpec spec_from_config(const RunConfig& config) {
  ProblemSpec spec;
  spec.n_spins = config.n_spins;
  spec.chi = config.chi;
  spec.omega = config.omega;
  spec.t_final = config.t_final;
  if (config.u_max > 0.0) spec.u_max = config.u_max;
  return spec;
}

// Reads a custom target state file: one "re im" amplitude pair per line, z-basis
// order m = +N/2 .. -N/2.
inline ComplexVector load_state_file(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("target", "cannot open state file '" + path + "'");
  std::vector<Complex> amps;
  double re = 0.0, im = 0.0;
  while (in >> re >> im) amps.emplace_back(re, im);
  if (static_cast<int>(amps.size()) != expected_dim) {
    throw ConfigError("target", "state file has " + std::to_string(amps.size()) +
                                    " amplitudes, expected " + std::to_string(expected_dim));
  }
  ComplexVector v(expected_dim);
  for (int i = 0; i < expected_dim; ++i) v[i] = amps[i];
  const double n = v.norm();
  if (!(n > 0.0)) throw ConfigError("target", "state file has zero norm");
  return v / n;
}

inline CostKind cost_kind_from_config(const RunConfig& config) {
  if (config.cost == "qfi") return CostKind::qfi();
  if (config.cost == "cfi") return CostKind::cfi(config.phase_init);
  if (config.target == "hl") return CostKind::fidelity(hl_state(config.n_spins));
  return CostKind::fidelity(load_state_file(config.target, config.n_spins + 1));
}

inline OptimizerOptions optimizer_options_from_config(const RunConfig& config) {
  OptimizerOptions opts;
  opts.n_intervals = config.n_intervals;
  opts.max_iters = config.max_iters;
  opts.tol_phi_sd = config.tol_phi_sd >= 0.0 ? config.tol_phi_sd
                                             : (config.cost == "cfi" ? 1e-2 : 1e-3);
  opts.initial_step = config.initial_step;
  opts.restarts = config.restarts;
  opts.seed = config.seed;
  opts.init_control_value = config.init_control_value;
  opts.phase_init = config.phase_init;
  opts.cfi_clamp = config.cfi_clamp;
  opts.samples_per_interval = config.samples_per_interval;
  opts.substeps_per_interval = config.substeps;
  return opts;
}

namespace detail {

// 17 significant digits: lossless double round-trip in the CSV artifacts.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["n_spins"] = config.n_spins;
  j["chi"] = config.chi;
  j["omega"] = config.omega;
  j["t_final"] = config.t_final;
  j["n_intervals"] = config.n_intervals;
  j["cost"] = config.cost;
  j["u_max"] = config.u_max > 0.0 ? nlohmann::ordered_json(config.u_max)
                                  : nlohmann::ordered_json("none");
  j["target"] = config.target;
  j["phase_init"] = config.phase_init;
  j["seed"] = config.seed;
  j["restarts"] = config.restarts;
  j["init_control_value"] = config.init_control_value;
  j["initial_step"] = config.initial_step;
  j["tol_phi_sd"] = config.tol_phi_sd >= 0.0 ? config.tol_phi_sd
                                             : (config.cost == "cfi" ? 1e-2 : 1e-3);
  j["max_iters"] = config.max_iters;
  j["substeps"] = config.substeps;
  j["samples_per_interval"] = config.samples_per_interval;
  j["cfi_clamp"] = config.cfi_clamp;
  j["delta_omega"] = config.delta_omega;
  j["delta_control"] = config.delta_control;
  j["output_dir"] = config.output_dir;
  return j;
}

struct RunArtifacts {
  OptimizationResult result;
  std::filesystem::path directory;
  int exit_code = 0;
};

inline std::string control_csv(const ControlProtocol& control) {
  std::string csv = "interval_start,interval_end,omega_value\n";
  const double dt = control.interval_length();
  for (int i = 0; i < control.n_intervals; ++i) {
    csv += detail::fmt17(dt * i) + "," + detail::fmt17(dt * (i + 1)) + "," +
           detail::fmt17(control.values[i]) + "\n";
  }
  return csv;
}

inline std::string diagnostics_csv(const DiagnosticsSeries& diag) {
  std::string csv = "t,phi,hc\n";
  for (Eigen::Index j = 0; j < diag.times.size(); ++j) {
    csv += detail::fmt17(diag.times[j]) + "," + detail::fmt17(diag.phi[j]) + "," +
           detail::fmt17(diag.hc[j]) + "\n";
  }
  return csv;
}

inline std::string probabilities_csv(const MeasurementDistribution& dist, int n_spins) {
  std::string csv = "m,P_m,dP_m\n";
  const double j = 0.5 * n_spins;
  for (Eigen::Index r = 0; r < dist.p.size(); ++r) {
    csv += detail::fmt17(j - static_cast<double>(r)) + "," + detail::fmt17(dist.p[r]) + "," +
           detail::fmt17(dist.dp_domega[r]) + "\n";
  }
  return csv;
}

// Optimizes the configured instance and writes summary.json, control.csv,
// diagnostics.csv and (CFI) probabilities.csv into output_dir.
inline RunArtifacts run_experiment(const RunConfig& config) {
  validate_config(config);
  RunArtifacts artifacts;
  artifacts.directory = resolve_output_dir(config);
  std::filesystem::create_directories(artifacts.directory);

  const ProblemSpec spec = spec_from_config(config);
  const CostKind kind = cost_kind_from_config(config);
  const OptimizerOptions opts = optimizer_options_from_config(config);

  const auto t0 = std::chrono::steady_clock::now();
  OptimizationResult result = optimize(spec, kind, opts);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::ordered_json summary;
  summary["objective"] = result.objective;
  summary["cost"] = config.cost;
  summary["phi_mean"] = result.diagnostics.phi_mean;
  summary["phi_sd"] = result.diagnostics.phi_sd;
  if (result.phase) summary["phase"] = *result.phase;
  summary["iterations"] = result.iterations;
  summary["status"] = result.status;
  summary["wall_time_seconds"] = wall;
  summary["config"] = config_to_json(config);
  detail::write_file(artifacts.directory / "summary.json", summary.dump(2) + "\n");

  detail::write_file(artifacts.directory / "control.csv", control_csv(result.control));
  detail::write_file(artifacts.directory / "diagnostics.csv", diagnostics_csv(result.diagnostics));

  if (kind.tag == CostKind::Tag::cfi) {
    const TerminalCost cost(spec.n_spins, kind, config.cfi_clamp);
    const AugmentedState final_state =
        evolve_final_state(spec, result.control, initial_augmented_state(spec.n_spins),
                           opts.substeps_per_interval);
    const MeasurementDistribution dist =
        measurement_distribution(final_state, cost.eigensystem(), result.phase.value_or(0.0));
    detail::write_file(artifacts.directory / "probabilities.csv",
                       probabilities_csv(dist, spec.n_spins));
  }

  artifacts.exit_code = result.status == "stalled" ? 2 : 0;
  artifacts.result = std::move(result);
  return artifacts;
}

// Sweep over t_final, u_max, or n_intervals. Each value runs in its own
// subdirectory; sweep.csv collects (value, objective, phi_sd, hc_mean).
// n_intervals sweeps warm-start each stage from the previous optimum
// (upsampled); u_max sweeps warm-start from the previous (looser) optimum,
// clamped to the new bound.
struct SweepRow {
  std::string value;
  double objective = 0.0;
  double phi_sd = 0.0;
  double hc_mean = 0.0;
  OptimizationResult result;
};

struct SweepArtifacts {
  std::vector<SweepRow> rows;
  std::filesystem::path directory;
  int exit_code = 0;
};

inline SweepArtifacts run_sweep(const RunConfig& base_config, const std::string& axis,
                                const std::vector<std::string>& values, bool warm_start = true) {
  if (values.empty()) throw ConfigError("values", "sweep requires a non-empty value list");
  if (axis != "t_final" && axis != "u_max" && axis != "n_intervals") {
    throw ConfigError("axis", "must be one of t_final, u_max, n_intervals");
  }
  validate_config(base_config);
  SweepArtifacts artifacts;
  artifacts.directory = resolve_output_dir(base_config);
  std::filesystem::create_directories(artifacts.directory);

  std::optional<OptimizationResult> previous;
  std::string csv = "value,objective,phi_sd,hc_mean\n";
  for (const std::string& value : values) {
    RunConfig config = base_config;
    apply_config_entry(config, axis, value);
    validate_config(config);
    config.output_dir = (artifacts.directory / (axis + "_" + value)).string();

    const ProblemSpec spec = spec_from_config(config);
    const CostKind kind = cost_kind_from_config(config);
    OptimizerOptions opts = optimizer_options_from_config(config);
    if (warm_start && previous) {
      if (axis == "n_intervals" && config.n_intervals % previous->control.n_intervals == 0) {
        const int factor = config.n_intervals / previous->control.n_intervals;
        RealVector init(config.n_intervals);
        for (int i = 0; i < config.n_intervals; ++i) init[i] = previous->control.values[i / factor];
        opts.initial_control = init;
        if (previous->phase) opts.phase_init = *previous->phase;
      } else if (axis == "u_max" && previous->control.n_intervals == config.n_intervals) {
        RealVector init = previous->control.values;
        if (spec.u_max) init = project_control(init, *spec.u_max);
        opts.initial_control = init;
        if (previous->phase) opts.phase_init = *previous->phase;
      }
    }

    std::filesystem::create_directories(config.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    OptimizationResult result = optimize(spec, kind, opts);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::ordered_json summary;
    summary["objective"] = result.objective;
    summary["cost"] = config.cost;
    summary["phi_mean"] = result.diagnostics.phi_mean;
    summary["phi_sd"] = result.diagnostics.phi_sd;
    if (result.phase) summary["phase"] = *result.phase;
    summary["iterations"] = result.iterations;
    summary["status"] = result.status;
    summary["wall_time_seconds"] = wall;
    summary["config"] = config_to_json(config);
    detail::write_file(std::filesystem::path(config.output_dir) / "summary.json",
                       summary.dump(2) + "\n");
    detail::write_file(std::filesystem::path(config.output_dir) / "control.csv",
                       control_csv(result.control));
    detail::write_file(std::filesystem::path(config.output_dir) / "diagnostics.csv",
                       diagnostics_csv(result.diagnostics));

    const auto [hc_mean, hc_rms] = phi_statistics(result.diagnostics.hc, spec.t_final);
    (void)hc_rms;
    SweepRow row;
    row.value = value;
    row.objective = result.objective;
    row.phi_sd = result.diagnostics.phi_sd;
    row.hc_mean = hc_mean;
    csv += value + "," + detail::fmt17(row.objective) + "," + detail::fmt17(row.phi_sd) + "," +
           detail::fmt17(row.hc_mean) + "\n";
    if (result.status == "stalled") artifacts.exit_code = 2;
    row.result = std::move(result);
    previous = row.result;
    artifacts.rows.push_back(std::move(row));
  }
  detail::write_file(artifacts.directory / "sweep.csv", csv);
  return artifacts;
}

inline nlohmann::ordered_json report_to_json(const GradientCheckReport& report) {
  nlohmann::ordered_json j;
  j["delta_omega"] = report.delta_omega;
  j["delta_control"] = report.delta_control;
  j["seed"] = report.seed;
  j["psi1_rel_err"] = report.psi1_rel_err;
  j["psi1_rel_err_half_delta"] = report.psi1_rel_err_half_delta;
  j["psi1_pass"] = report.psi1_pass;
  j["truncation_dominated"] = report.truncation_dominated;
  j["pairing_drift"] = report.pairing_drift;
  j["pairing_pass"] = report.pairing_pass;
  j["gradient_checks"] = nlohmann::ordered_json::array();
  for (const CostGradientCheck& c : report.gradient_checks) {
    nlohmann::ordered_json e;
    e["cost"] = c.cost_name;
    e["constant"] = c.constant;
    e["spread"] = c.spread;
    e["max_rel_err"] = c.max_rel_err;
    e["pass"] = c.pass;
    j["gradient_checks"].push_back(e);
  }
  j["pass"] = report.pass;
  return j;
}

// Oracle checks at the configured instance; writes gradient_check.json.
// Exit code 0 if all checks pass, 3 otherwise.
inline int run_verify(const RunConfig& config) {
  validate_config(config);
  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);
  OracleSettings settings;
  settings.delta_omega = config.delta_omega;
  settings.delta_control = config.delta_control;
  const GradientCheckReport report =
      run_gradient_checks(spec_from_config(config), config.n_intervals, settings, config.seed);
  detail::write_file(dir / "gradient_check.json", report_to_json(report).dump(2) + "\n");
  return report.pass ? 0 : 3;
}

// Reads a control.csv written by run_experiment.
inline ControlProtocol read_control_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input", "cannot open control file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("input", "empty control file");
  std::vector<double> starts, ends, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0.0, b = 0.0, v = 0.0;
    if (!(row >> a >> b >> v)) throw ConfigError("input", "malformed control row: " + line);
    starts.push_back(a);
    ends.push_back(b);
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("input", "control file has no intervals");
  ControlProtocol control;
  control.n_intervals = static_cast<int>(values.size());
  control.t_final = ends.back();
  control.values = Eigen::Map<const RealVector>(values.data(), values.size());
  return control;
}

inline std::string rescaled_csv(const RescaledControl& rescaled) {
  std::string csv = "s_start,s_end,omega_bar\n";
  for (Eigen::Index i = 0; i < rescaled.values.size(); ++i) {
    csv += detail::fmt17(rescaled.s_boundaries[i]) + "," +
           detail::fmt17(rescaled.s_boundaries[i + 1]) + "," + detail::fmt17(rescaled.values[i]) +
           "\n";
  }
  return csv;
}

// rescale subcommand: control.csv -> dimensionless control CSV.
inline int run_rescale(const RunConfig& config, const std::string& input_path,
                       const std::string& output_path) {
  if (config.n_spins < 1) throw ConfigError("n_spins", "must be >= 1");
  if (!(config.n_spins * config.chi > 0.0)) {
    throw ConfigError("chi", "N*chi must be positive for dimensionless rescaling");
  }
  ControlProtocol control = read_control_csv(input_path);
  ProblemSpec spec = spec_from_config(config);
  spec.t_final = control.t_final;
  const RescaledControl rescaled = dimensionless_rescale(control, spec);
  detail::write_file(output_path, rescaled_csv(rescaled));
  return 0;
}

}  // namespace pmpm
