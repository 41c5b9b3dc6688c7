#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wfl/analog.hpp"
#include "wfl/bounds.hpp"
#include "wfl/config.hpp"
#include "wfl/csv.hpp"
#include "wfl/digital.hpp"
#include "wfl/task.hpp"

namespace wfl::harness {

/// A validated configuration with its task and per-paradigm transport
/// settings resolved. The task depends only on the task keys and task_seed,
/// so every trial seed runs on the same problem.
struct Scenario {
  ExperimentConfig config;
  LearningTask task;
  double t_max = 0.0;
  digital::DigitalConfig digital;
  analog::AnalogConfig analog;
  bounds::BoundInputs bound_inputs;
  bool eta_feasible_digital = false;
  bool eta_feasible_analog = false;
};

/// Throws ConfigError for malformed values and InfeasibleConfig when the
/// system constraints (N <= M, N <= K, T_max >= d M / B for analog) fail.
Scenario build_scenario(const ExperimentConfig& cfg);

/// Row m describes round m: the gap is F(w_{m+1}) - F(w*) after the update,
/// mse is |g_hat - g|^2 of the aggregate used by that update, and bound is
/// the closed-form bound on the same gap (NaN when the learning rate is
/// outside the hypothesis of the bound).
struct RoundTrace {
  std::size_t round = 0;
  double gap = 0.0;
  double mse = 0.0;
  double bound = 0.0;
  double delay = 0.0;
  std::size_t successes = 0;
  std::size_t truncations = 0;
  double max_power = 0.0;
  bool zeta_fallback = false;
  std::optional<double> accuracy;  // logistic tasks only
};

/// Single-paradigm trial; `paradigm` must not be `both`. Throws TrialAborted
/// if a local gradient leaves the bounded-gradient ball of the task, and
/// std::logic_error on any delay or power violation.
std::vector<RoundTrace> run_trial(const Scenario& scenario, Paradigm paradigm, std::uint64_t seed);

/// The paradigms a config asks for, `both` expanded.
std::vector<Paradigm> expand(Paradigm paradigm);

/// Closed-form bound on the gap after round m, m = 0 .. rounds-1, or NaN
/// when the learning rate violates the hypothesis.
std::vector<double> bound_trajectory(const Scenario& scenario, Paradigm paradigm, std::size_t rounds);
double bound_limit(const Scenario& scenario, Paradigm paradigm);
double bound_asymptote(const Scenario& scenario, Paradigm paradigm);
bool eta_feasible(const Scenario& scenario, Paradigm paradigm);

/// Per-round mean and standard error over seeds.
struct SeedAverage {
  std::vector<double> mean_gap;
  std::vector<double> stderr_gap;
  std::vector<double> mean_mse;
  std::vector<double> mean_successes;
  std::vector<double> mean_truncations;
  std::vector<double> delay;  // max over seeds
  std::vector<double> bound;
  double max_power = 0.0;
};

/// Runs every seed (concurrently when threads allow) and averages.
/// Results do not depend on the thread count.
std::vector<std::vector<RoundTrace>> run_seeds(const Scenario& scenario, Paradigm paradigm,
                                               const std::vector<std::uint64_t>& seeds);
SeedAverage average(const std::vector<std::vector<RoundTrace>>& traces);

inline const std::vector<std::string> kTraceHeader{"round", "m_gap", "mse", "bound", "delay", "successes",
                                                   "truncations"};

CsvTable trace_table(const std::vector<RoundTrace>& trace);
CsvTable average_table(const SeedAverage& avg);

/// Writes trace_<paradigm>_seed<seed>.csv (and accuracy_... for logistic
/// tasks) plus the resolved config.
void write_run(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
               const std::filesystem::path& out_dir);

struct SweepPoint {
  std::string value;
  Paradigm paradigm = Paradigm::digital;
  bool feasible = false;
  bool eta_feasible = false;
  double mean_final_gap = 0.0;
  double stderr_final_gap = 0.0;
  double bound_limit = 0.0;
  double bound_asymptote = 0.0;
  std::optional<SeedAverage> average;
  std::string note;  // reason a point is infeasible
};

/// Evaluates every sweep value and paradigm. Infeasible points and aborted
/// trials are flagged instead of stopping the sweep.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg);

/// Writes point_<index>_<paradigm>.csv per feasible point and summary.csv.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Per-round bound overlay in the trace schema plus limit and asymptote
/// columns. Columns that only a simulation can fill are NaN; successes and
/// truncations hold their expected values. Throws InfeasibleConfig when the
/// learning rate violates the hypothesis for the paradigm.
CsvTable bound_overlay(const Scenario& scenario, Paradigm paradigm);

/// bounds_<paradigm>.csv for each configured paradigm and bounds_summary.csv.
void emit_bound_overlay(const Scenario& scenario, const std::filesystem::path& out_dir);

}  // namespace wfl::harness
