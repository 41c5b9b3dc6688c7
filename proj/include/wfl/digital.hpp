#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wfl/channel.hpp"
#include "wfl/task.hpp"
#include "wfl/training.hpp"

namespace wfl::digital {

/// Stochastically quantized gradient. Coordinate i reconstructs to
/// sign_i * (g_min + level_i * step()).
struct QuantizedGradient {
  double g_min = 0.0;
  double g_max = 0.0;
  int bits = 1;
  std::vector<std::uint64_t> levels;
  std::vector<std::int8_t> signs;

  double step() const;
};

inline constexpr int kMaxBits = 32;

QuantizedGradient quantize(const Vector& g, int bits, Rng& rng);
Vector dequantize(const QuantizedGradient& q);

/// d (b + 1) + q
std::uint64_t payload_bits(std::uint64_t d, std::uint64_t b, std::uint64_t q);

/// Smallest theta with N d (b + 1) / (B log2(1 + theta)) <= T_max.
double min_theta(int participants, std::size_t d, int bits, double bandwidth, double t_max);

/// N d (b + 1) / (B log2(1 + theta))
double tx_delay_digital(int participants, std::size_t d, int bits, double bandwidth, double theta);

enum class OutageMode { empirical, analytic };

struct DigitalConfig {
  channel::RadioParams radio;
  int participants = 1;
  int bits = 8;
  double theta = 1.0;
  double t_max = 1.0;
  OutageMode outage = OutageMode::empirical;
  channel::PowerConvention convention = channel::PowerConvention::mean2;
};

struct DigitalRoundOutcome {
  Vector g_hat;
  std::vector<char> success;           // per device, false for non-participants
  std::vector<double> xi;              // realized distortion, 0 or 1/p_k
  std::vector<double> success_probability;
  double theta = 0.0;
  double delay = 0.0;
  double transmit_power = 0.0;         // every participant sends at P_max
  std::size_t successes = 0;
};

/// One uplink round: quantize each participant's local gradient, decide
/// erasures against the fixed rate, and aggregate
///   g_hat = sum_k chi_k alpha_k xi_k / r_k * Q(g^k).
/// `channels` holds one realization per device (indexed by device).
DigitalRoundOutcome digital_round(const LearningTask& task, const ModelState& state,
                                  std::span<const std::size_t> participants,
                                  std::span<const channel::ChannelRealization> channels,
                                  const DigitalConfig& cfg, const RoundStreams& streams);

}  // namespace wfl::digital
