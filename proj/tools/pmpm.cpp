// Command-line experiment runner: optimizes twist-and-turn control pulses for
// QFI/CFI/fidelity objectives and writes machine-readable artifacts.
//
// Subcommands: run, sweep, verify, rescale. Exit codes: 0 ok, 1 config error,
// 2 optimizer stalled, 3 verification checks failed.

#include "pmpm/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

struct CliState {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// One flag per configuration key; values go through the same parser as the
// config file, and command-line flags override file entries.
void add_config_flags(CLI::App* cmd, CliState& state) {
  cmd->add_option("--config", state.config_file, "flat key=value configuration file");
  static const char* keys[] = {"n_spins",
                               "chi",
                               "omega",
                               "t_final",
                               "n_intervals",
                               "cost",
                               "u_max",
                               "target",
                               "phase_init",
                               "seed",
                               "restarts",
                               "init_control_value",
                               "initial_step",
                               "tol_phi_sd",
                               "max_iters",
                               "substeps",
                               "samples_per_interval",
                               "cfi_clamp",
                               "delta_omega",
                               "delta_control",
                               "output_dir"};
  for (const char* key : keys) {
    std::string name = key;
    cmd->add_option_function<std::string>(
        "--" + name,
        [&state, name](const std::string& value) { state.overrides.emplace_back(name, value); },
        "override config key " + name);
  }
}

pmpm::RunConfig build_config(const CliState& state) {
  pmpm::RunConfig config;
  if (!state.config_file.empty()) config = pmpm::parse_config_file(state.config_file);
  for (const auto& [key, value] : state.overrides) {
    pmpm::apply_config_entry(config, key, value);
  }
  return config;
}

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-control pulse shaping for collective-spin Fisher information"};
  app.require_subcommand(1);

  CliState run_state, sweep_state, verify_state, rescale_state;
  std::string sweep_axis, sweep_values;
  bool sweep_cold = false;
  std::string rescale_input, rescale_output;

  CLI::App* run_cmd = app.add_subcommand("run", "optimize one configured instance");
  add_config_flags(run_cmd, run_state);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  add_config_flags(sweep_cmd, sweep_state);
  sweep_cmd->add_option("--axis", sweep_axis, "sweep axis: t_final | u_max | n_intervals")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")->required();
  sweep_cmd->add_flag("--cold-start", sweep_cold, "disable warm-starting between sweep stages");

  CLI::App* verify_cmd = app.add_subcommand("verify", "run gradient/adjoint oracle checks");
  add_config_flags(verify_cmd, verify_state);

  CLI::App* rescale_cmd =
      app.add_subcommand("rescale", "rewrite a control.csv in dimensionless units");
  add_config_flags(rescale_cmd, rescale_state);
  rescale_cmd->add_option("--input", rescale_input, "control.csv to rescale")->required();
  rescale_cmd->add_option("--output", rescale_output, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run_cmd->parsed()) {
      const pmpm::RunConfig config = build_config(run_state);
      const pmpm::RunArtifacts artifacts = pmpm::run_experiment(config);
      std::cout << "objective=" << pmpm::detail::fmt17(artifacts.result.objective)
                << " phi_sd=" << pmpm::detail::fmt17(artifacts.result.diagnostics.phi_sd)
                << " status=" << artifacts.result.status << "\n"
                << "artifacts: " << artifacts.directory.string() << "\n";
      return artifacts.exit_code;
    }
    if (sweep_cmd->parsed()) {
      const pmpm::RunConfig config = build_config(sweep_state);
      const pmpm::SweepArtifacts artifacts =
          pmpm::run_sweep(config, sweep_axis, split_values(sweep_values), !sweep_cold);
      for (const pmpm::SweepRow& row : artifacts.rows) {
        std::cout << sweep_axis << "=" << row.value
                  << " objective=" << pmpm::detail::fmt17(row.objective)
                  << " phi_sd=" << pmpm::detail::fmt17(row.phi_sd) << "\n";
      }
      std::cout << "artifacts: " << artifacts.directory.string() << "\n";
      return artifacts.exit_code;
    }
    if (verify_cmd->parsed()) {
      const pmpm::RunConfig config = build_config(verify_state);
      const int code = pmpm::run_verify(config);
      std::cout << (code == 0 ? "all checks passed" : "verification FAILED") << "\n";
      return code;
    }
    if (rescale_cmd->parsed()) {
      const pmpm::RunConfig config = build_config(rescale_state);
      return pmpm::run_rescale(config, rescale_input, rescale_output);
    }
  } catch (const pmpm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
