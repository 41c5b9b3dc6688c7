#include "wfl/digital.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wfl/errors.hpp"

namespace wfl::digital {

namespace {

double interval_count(int bits) { return std::ldexp(1.0, bits) - 1.0; }

}  // namespace

double QuantizedGradient::step() const { return (g_max - g_min) / interval_count(bits); }

QuantizedGradient quantize(const Vector& g, int bits, Rng& rng) {
  if (bits < 1) throw std::invalid_argument("quantizer needs at least one bit");
  if (bits > kMaxBits) throw std::invalid_argument("quantizer supports at most 32 bits");
  if (g.size() == 0) throw std::invalid_argument("cannot quantize an empty vector");
  if (!g.allFinite()) throw std::domain_error("cannot quantize non-finite values");

  QuantizedGradient q;
  q.bits = bits;
  const Vector moduli = g.cwiseAbs();
  q.g_min = moduli.minCoeff();
  q.g_max = moduli.maxCoeff();
  const auto n = static_cast<std::size_t>(g.size());
  q.levels.resize(n);
  q.signs.resize(n);

  const double step = q.step();
  const auto top = static_cast<std::uint64_t>(interval_count(bits));
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    q.signs[i] = g[idx] < 0.0 ? -1 : 1;
    const double coin = rng.uniform();
    if (step == 0.0) {
      q.levels[i] = 0;
      continue;
    }
    const double position = (moduli[idx] - q.g_min) / step;
    const double lower = std::clamp(std::floor(position), 0.0, static_cast<double>(top - 1));
    const double frac = std::clamp(position - lower, 0.0, 1.0);
    q.levels[i] = static_cast<std::uint64_t>(lower) + (coin < frac ? 1 : 0);
  }
  return q;
}

Vector dequantize(const QuantizedGradient& q) {
  if (q.levels.size() != q.signs.size()) throw std::invalid_argument("malformed quantized gradient");
  const double step = q.step();
  Vector out(static_cast<Eigen::Index>(q.levels.size()));
  for (std::size_t i = 0; i < q.levels.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = q.signs[i] * (q.g_min + static_cast<double>(q.levels[i]) * step);
  return out;
}

std::uint64_t payload_bits(std::uint64_t d, std::uint64_t b, std::uint64_t q) { return d * (b + 1) + q; }

double tx_delay_digital(int participants, std::size_t d, int bits, double bandwidth, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  const double payload = static_cast<double>(participants) * static_cast<double>(d) * (bits + 1);
  // log2(1 + theta) through log1p keeps tiny theta finite
  return payload * std::numbers::ln2 / (bandwidth * std::log1p(theta));
}

double min_theta(int participants, std::size_t d, int bits, double bandwidth, double t_max) {
  if (!(t_max > 0.0)) throw std::invalid_argument("T_max must be positive");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  const double exponent =
      static_cast<double>(participants) * static_cast<double>(d) * (bits + 1) / (bandwidth * t_max);
  double theta = std::expm1(exponent * std::numbers::ln2);
  if (!(theta > 0.0)) return theta;
  // The closed form can land one ulp short of the delay target.
  for (int i = 0; i < 64 && tx_delay_digital(participants, d, bits, bandwidth, theta) > t_max; ++i)
    theta = std::nextafter(theta, std::numeric_limits<double>::infinity());
  return theta;
}

DigitalRoundOutcome digital_round(const LearningTask& task, const ModelState& state,
                                  std::span<const std::size_t> participants,
                                  std::span<const channel::ChannelRealization> channels,
                                  const DigitalConfig& cfg, const RoundStreams& streams) {
  if (participants.empty()) throw std::invalid_argument("digital round needs at least one participant");
  if (participants.size() != static_cast<std::size_t>(cfg.participants))
    throw std::invalid_argument("participant set size differs from the configured N");
  if (channels.size() != task.num_devices())
    throw std::invalid_argument("need one channel realization per device");
  channel::validate(cfg.radio);

  const std::size_t d = task.dimension();
  const double theta_floor = min_theta(cfg.participants, d, cfg.bits, cfg.radio.bandwidth, cfg.t_max);
  if (!(cfg.theta > 0.0) || cfg.theta < theta_floor * (1.0 - 1e-12))
    throw InfeasibleConfig("theta " + std::to_string(cfg.theta) + " violates the delay target (needs >= " +
                           std::to_string(theta_floor) + ")");

  const std::size_t K = task.num_devices();
  DigitalRoundOutcome out;
  out.g_hat = Vector::Zero(static_cast<Eigen::Index>(d));
  out.success.assign(K, 0);
  out.xi.assign(K, 0.0);
  out.success_probability.assign(K, 0.0);
  out.theta = cfg.theta;
  out.delay = tx_delay_digital(cfg.participants, d, cfg.bits, cfg.radio.bandwidth, cfg.theta);
  out.transmit_power = cfg.radio.p_max;

  const double sub_bandwidth = cfg.radio.bandwidth / cfg.participants;
  const double rate = sub_bandwidth * std::log2(1.0 + cfg.theta);

  for (std::size_t k : participants) {
    const auto& dev = task.device(k);
    const double p = channel::success_probability(cfg.theta, cfg.radio.bandwidth, cfg.participants,
                                                  cfg.radio.p_max, dev.path_loss,
                                                  cfg.radio.noise_density, cfg.convention);
    out.success_probability[k] = p;

    Rng quant_rng = streams.stream(Stream::quantizer, k);
    const QuantizedGradient q = quantize(task.local_gradient(k, state.weights), cfg.bits, quant_rng);

    bool ok = false;
    if (cfg.outage == OutageMode::empirical) {
      ok = rate <= channel::capacity(cfg.radio.p_max, dev.path_loss, channels[k].h, sub_bandwidth,
                                     cfg.radio.noise_density);
    } else {
      Rng outage_rng = streams.stream(Stream::outage, k);
      ok = outage_rng.bernoulli(p);
    }
    if (!ok) continue;
    if (!(p > 0.0)) throw std::domain_error("device succeeded with zero success probability");
    out.success[k] = 1;
    out.xi[k] = 1.0 / p;
    ++out.successes;
    out.g_hat += (dev.alpha * out.xi[k] / dev.inclusion) * dequantize(q);
  }
  return out;
}

}  // namespace wfl::digital
