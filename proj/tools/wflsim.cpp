// wflsim: run federated-learning transport experiments from a config file.
//
//   wflsim run    --config <path> [--seed <u64>] [--out <dir>]
//   wflsim sweep  --config <path> --param <name> --values <a,b,...> --out <dir>
//   wflsim bounds --config <path> --out <dir>
//
// Exit status: 0 success, 2 malformed or infeasible config, 1 internal error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wfl/config.hpp"
#include "wfl/errors.hpp"
#include "wfl/experiment.hpp"

namespace {

using namespace wfl::harness;

void report_eta(const Scenario& s) {
  for (Paradigm p : expand(s.config.paradigm)) {
    if (!eta_feasible(s, p))
      std::cerr << "warning: eta " << s.config.eta << " is outside the convergence hypothesis for " << to_string(p)
                << "; bound columns are nan\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital and analog federated learning transport simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string paradigm;
  std::optional<std::uint64_t> seed;
  std::string param;
  std::string values;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file")->required();
    cmd->add_option("--paradigm", paradigm, "Override: digital, analog, both or ideal");
  };

  auto* run = app.add_subcommand("run", "Run one trial per seed and write traces");
  add_common(run);
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Sweep one config key and write seed-averaged results");
  add_common(sweep);
  sweep->add_option("--param", param, "Config key to sweep")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();

  auto* bounds = app.add_subcommand("bounds", "Write the closed-form bound overlay");
  add_common(bounds);
  bounds->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (!paradigm.empty()) cfg.paradigm = parse_paradigm(paradigm);

    if (*run) {
      if (seed) cfg.seeds = {*seed};
      const Scenario s = build_scenario(cfg);
      report_eta(s);
      write_run(s, cfg.seeds, out_dir);
    } else if (*sweep) {
      apply_setting(cfg, "sweep_param", param);
      apply_setting(cfg, "sweep_values", values);
      const auto points = run_sweep(cfg, out_dir);
      for (const auto& pt : points) {
        if (!pt.feasible) std::cerr << "point " << pt.value << " (" << to_string(pt.paradigm) << "): " << pt.note << "\n";
        else if (!pt.eta_feasible)
          std::cerr << "point " << pt.value << " (" << to_string(pt.paradigm)
                    << "): eta outside the convergence hypothesis\n";
      }
    } else if (*bounds) {
      emit_bound_overlay(build_scenario(cfg), out_dir);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const wfl::InfeasibleConfig& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
