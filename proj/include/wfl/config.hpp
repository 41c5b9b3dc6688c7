#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wfl/analog.hpp"
#include "wfl/channel.hpp"
#include "wfl/digital.hpp"
#include "wfl/task.hpp"

namespace wfl::harness {

enum class Paradigm { digital, analog, both, ideal };

/// Malformed configuration text or value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SweepSpec {
  std::string param;
  std::vector<std::string> values;
};

/// Keys in the config file are the field names below.
struct ExperimentConfig {
  // system
  int k = 20;
  int n = 10;
  std::size_t d = 32;
  int b = 8;
  int q = 64;
  double gamma_th = 0.5;
  double rho = 1.0;
  double eta = 0.01;
  std::optional<double> t_max;  // unset: T_max = T_A = d M / B
  double bandwidth = 1e6;       // Hz
  double n0 = 1e-11;            // W/Hz, -80 dBm/Hz
  double p_max = 1e-3;          // W
  int m = 20;                   // subbands
  std::vector<double> path_loss_db{-10.0};  // power gain L_k^2 in dB; one value or k values
  std::vector<double> alpha;                // empty: uniform
  std::vector<double> inclusion;            // empty: n / k each

  // task
  TaskFamily task_family = TaskFamily::quadratic;
  double heterogeneity = 0.1;
  double conditioning = 2.0;
  double init_distance = 1.0;
  std::uint64_t task_seed = 1;
  std::size_t samples_per_device = 50;
  double regularization = 0.1;

  // run
  Paradigm paradigm = Paradigm::both;
  std::size_t rounds = 300;
  std::vector<std::uint64_t> seeds{1};
  std::optional<SweepSpec> sweep;
  analog::ZetaMode zeta_mode = analog::ZetaMode::adaptive;
  digital::OutageMode outage_mode = digital::OutageMode::empirical;
  channel::PowerConvention digital_convention = channel::PowerConvention::mean2;
  channel::PowerConvention analog_convention = channel::PowerConvention::mean1;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Sets one key. Values may carry units where the key is dimensional:
/// p_max in W, mW or dBm; n0 in W/Hz or dBm/Hz; bandwidth in Hz, kHz or MHz.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` lines, `#` comments. `include = <path>` loads another
/// file (relative to the including file) whose keys the later lines override.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form, loadable by parse_config.
std::string format_config(const ExperimentConfig& cfg);

std::string to_string(Paradigm p);
Paradigm parse_paradigm(std::string_view text);

}  // namespace wfl::harness
