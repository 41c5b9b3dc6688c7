#include "wfl/analog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "wfl/errors.hpp"

namespace wfl::analog {

double compensation(double gamma_th, double rho) {
  return compensation(gamma_th, rho, channel::PowerConvention::mean1);
}

double compensation(double gamma_th, double rho, channel::PowerConvention convention) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  if (!(gamma_th >= 0.0)) throw std::invalid_argument("gamma_th must be nonnegative");
  return 1.0 / (channel::truncation_probability(gamma_th, convention) * rho);
}

double tx_delay_analog(std::size_t d, int subbands, double bandwidth) {
  if (d == 0 || subbands < 1 || !(bandwidth > 0.0))
    throw std::invalid_argument("analog delay needs positive d, M and B");
  return static_cast<double>(d) * subbands / bandwidth;
}

AnalogPrecoder precoder(std::complex<double> h_hat, double alpha, double inclusion, double path_loss,
                        double gamma_th, double lambda, double zeta) {
  if (!(gamma_th >= 0.0)) throw std::invalid_argument("gamma_th must be nonnegative");
  AnalogPrecoder out;
  out.lambda = lambda;
  out.zeta = zeta;
  const double gain = std::norm(h_hat);
  if (gain < gamma_th || gain == 0.0) {
    out.truncated = true;
    out.beta = 0.0;
    return out;
  }
  out.beta = zeta * lambda * alpha * std::conj(h_hat) / (inclusion * path_loss * gain);
  return out;
}

double scaling_factor(const LearningTask& task, std::span<const std::size_t> participants,
                      std::span<const Vector> gradients,
                      std::span<const channel::ChannelRealization> channels, const AnalogConfig& cfg) {
  if (gradients.size() != participants.size())
    throw std::invalid_argument("need one gradient per participant");
  const double lambda = compensation(cfg.gamma_th, cfg.radio.rho, cfg.convention);
  bool any_active = false;
  double zeta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const std::size_t k = participants[i];
    const auto& dev = task.device(k);
    const double gain = std::norm(channels[k].h_hat);
    if (gain < cfg.gamma_th || gain == 0.0) continue;
    any_active = true;
    const double grad_norm = gradients[i].norm();
    if (grad_norm == 0.0) continue;
    const double cap = std::sqrt(cfg.radio.p_max) * dev.inclusion * dev.path_loss * std::sqrt(gain) /
                       (lambda * dev.alpha * grad_norm);
    zeta = std::min(zeta, cap);
  }
  if (!any_active) throw std::domain_error("every participant is truncated");
  return zeta;
}

double static_scaling_factor(const LearningTask& task, const AnalogConfig& cfg) {
  if (!(cfg.gamma_th > 0.0)) throw std::domain_error("static scaling needs gamma_th > 0");
  if (!(cfg.gradient_bound > 0.0)) throw std::domain_error("static scaling needs a positive gradient bound");
  const double lambda = compensation(cfg.gamma_th, cfg.radio.rho, cfg.convention);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& dev : task.devices()) worst = std::min(worst, dev.inclusion * dev.path_loss / dev.alpha);
  return std::sqrt(cfg.radio.p_max * cfg.gamma_th) * worst / (lambda * cfg.gradient_bound);
}

AnalogRoundOutcome analog_round(const LearningTask& task, const ModelState& state,
                                std::span<const std::size_t> participants,
                                std::span<const channel::ChannelRealization> channels,
                                const AnalogConfig& cfg, const RoundStreams& streams) {
  if (participants.empty()) throw std::invalid_argument("analog round needs at least one participant");
  if (channels.size() != task.num_devices())
    throw std::invalid_argument("need one channel realization per device");
  channel::validate(cfg.radio);

  const std::size_t d = task.dimension();
  const std::size_t K = task.num_devices();
  AnalogRoundOutcome out;
  out.delay = tx_delay_analog(d, cfg.radio.subbands, cfg.radio.bandwidth);
  if (out.delay > cfg.t_max)
    throw InfeasibleConfig("analog delay " + std::to_string(out.delay) + " s exceeds T_max " +
                           std::to_string(cfg.t_max) + " s");

  const double lambda = compensation(cfg.gamma_th, cfg.radio.rho, cfg.convention);
  std::vector<Vector> gradients;
  gradients.reserve(participants.size());
  for (std::size_t k : participants) gradients.push_back(task.local_gradient(k, state.weights));

  bool all_truncated = true;
  for (std::size_t k : participants) {
    const double gain = std::norm(channels[k].h_hat);
    if (gain >= cfg.gamma_th && gain > 0.0) all_truncated = false;
  }

  if (cfg.zeta_mode == ZetaMode::static_conservative) {
    out.zeta = static_scaling_factor(task, cfg);
  } else if (all_truncated) {
    out.zeta = static_scaling_factor(task, cfg);
    out.zeta_fallback = true;
  } else {
    out.zeta = scaling_factor(task, participants, gradients, channels, cfg);
    if (!std::isfinite(out.zeta)) {
      out.zeta = static_scaling_factor(task, cfg);
      out.zeta_fallback = true;
    }
  }

  // The closed-form scaling can overshoot P_max by a few ulps; trim zeta so
  // the budget holds exactly. Anything larger is a logic error.
  std::vector<AnalogPrecoder> precoders(participants.size());
  for (int attempt = 0;; ++attempt) {
    double worst = 0.0;
    for (std::size_t i = 0; i < participants.size(); ++i) {
      const std::size_t k = participants[i];
      const auto& dev = task.device(k);
      precoders[i] = precoder(channels[k].h_hat, dev.alpha, dev.inclusion, dev.path_loss, cfg.gamma_th,
                              lambda, out.zeta);
      if (!precoders[i].truncated)
        worst = std::max(worst, std::norm(precoders[i].beta) * gradients[i].squaredNorm());
    }
    if (worst <= cfg.radio.p_max) break;
    if (worst > cfg.radio.p_max * (1.0 + 1e-9) || attempt == 64)
      throw std::logic_error("scaling factor " + std::to_string(out.zeta) + " exceeds the power budget");
    out.zeta = std::nextafter(out.zeta * std::sqrt(cfg.radio.p_max / worst), 0.0);
  }

  out.g_hat = Vector::Zero(static_cast<Eigen::Index>(d));
  out.xi.assign(K, 0.0);
  out.truncated.assign(K, 0);
  out.power.assign(K, 0.0);

  // Re{y} = sum_k Re{hbar_k beta_k} g^k + Re{z}
  Vector received = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const std::size_t k = participants[i];
    const auto& dev = task.device(k);
    const auto& ch = channels[k];
    const AnalogPrecoder& pre = precoders[i];
    if (pre.truncated) {
      out.truncated[k] = 1;
      ++out.truncations;
      continue;
    }
    const double power = std::norm(pre.beta) * gradients[i].squaredNorm();
    out.power[k] = power;
    out.max_power = std::max(out.max_power, power);
    out.xi[k] = lambda * std::real(std::conj(ch.h) * ch.h_hat) / std::norm(ch.h_hat);
    const std::complex<double> effective = dev.path_loss * ch.h * pre.beta;
    received += effective.real() * gradients[i];
  }

  const double noise_variance = cfg.radio.bandwidth * cfg.radio.noise_density / 2.0;
  if (cfg.noise_enabled) {
    Rng noise_rng = streams.stream(Stream::noise, K);
    const double sd = std::sqrt(noise_variance);
    Vector noise(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = sd * noise_rng.normal();
    received += noise;
    out.noise_energy = noise.squaredNorm() / (out.zeta * out.zeta);
    out.expected_noise_energy = static_cast<double>(d) * noise_variance / (out.zeta * out.zeta);
  }
  out.g_hat = received / out.zeta;
  return out;
}

}  // namespace wfl::analog
