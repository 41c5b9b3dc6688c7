#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "wfl/channel.hpp"
#include "wfl/task.hpp"
#include "wfl/training.hpp"

namespace wfl::analog {

struct AnalogPrecoder {
  std::complex<double> beta;
  bool truncated = false;
  double lambda = 1.0;
  double zeta = 1.0;
};

enum class ZetaMode { adaptive, static_conservative };

struct AnalogConfig {
  channel::RadioParams radio;
  double gamma_th = 0.5;
  double t_max = 1.0;
  ZetaMode zeta_mode = ZetaMode::adaptive;
  channel::PowerConvention convention = channel::PowerConvention::mean1;
  double gradient_bound = 0.0;  // gamma, used by the static-conservative scaling
  bool noise_enabled = true;
};

struct AnalogRoundOutcome {
  Vector g_hat;
  std::vector<double> xi;        // realized distortion per device, 0 if truncated or idle
  std::vector<char> truncated;   // per device, participants only
  std::vector<double> power;     // |beta_k g^k|^2 per device
  double zeta = 0.0;
  bool zeta_fallback = false;    // static scaling used because no adaptive cap existed
  double noise_energy = 0.0;     // realized |z_bar|^2
  double expected_noise_energy = 0.0;  // d B N0 / (2 zeta^2)
  double delay = 0.0;
  std::size_t truncations = 0;
  double max_power = 0.0;
};

/// e^{gamma_th} / rho: makes E[xi] = 1 when Pr{not truncated} = e^{-gamma_th}.
double compensation(double gamma_th, double rho);
/// Same, for the truncation law of an arbitrary power convention.
double compensation(double gamma_th, double rho, channel::PowerConvention convention);

/// d M / B
double tx_delay_analog(std::size_t d, int subbands, double bandwidth);

AnalogPrecoder precoder(std::complex<double> h_hat, double alpha, double inclusion, double path_loss,
                        double gamma_th, double lambda, double zeta);

/// Largest zeta keeping every non-truncated participant within P_max:
///   min_k sqrt(P_max) r_k L_k |h_hat_k| / (lambda alpha_k |g^k|).
/// `gradients` is aligned with `participants`. Throws std::domain_error when
/// every participant is truncated; returns +inf when no participant with a
/// nonzero gradient transmits.
double scaling_factor(const LearningTask& task, std::span<const std::size_t> participants,
                      std::span<const Vector> gradients,
                      std::span<const channel::ChannelRealization> channels, const AnalogConfig& cfg);

/// Worst-case scaling valid for every channel above the cutoff and every
/// gradient with norm <= gamma:
///   sqrt(P_max gamma_th) min_k{r_k L_k / alpha_k} / (lambda gamma).
double static_scaling_factor(const LearningTask& task, const AnalogConfig& cfg);

/// One AirComp round: precode with truncated channel inversion, superpose
/// over the true channels, add receiver noise, and rescale Re{y} by 1/zeta.
AnalogRoundOutcome analog_round(const LearningTask& task, const ModelState& state,
                                std::span<const std::size_t> participants,
                                std::span<const channel::ChannelRealization> channels,
                                const AnalogConfig& cfg, const RoundStreams& streams);

}  // namespace wfl::analog
