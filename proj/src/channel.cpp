#include "wfl/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace wfl::channel {

double mean_gain(PowerConvention convention) {
  return convention == PowerConvention::mean1 ? 1.0 : 2.0;
}

void validate(const RadioParams& radio) {
  if (!(radio.bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(radio.noise_density > 0.0)) throw std::invalid_argument("noise density must be positive");
  if (!(radio.p_max > 0.0)) throw std::invalid_argument("maximum power must be positive");
  if (radio.subbands < 1) throw std::invalid_argument("subband count must be positive");
  if (!(radio.rho > 0.0 && radio.rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
}

ChannelRealization draw_channel(double rho, PowerConvention convention, Rng& rng) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  const double mean = mean_gain(convention);
  ChannelRealization out;
  out.h_hat = rng.complex_normal(mean);
  out.v = rng.complex_normal(mean);
  out.h = rho * out.h_hat + std::sqrt(1.0 - rho * rho) * out.v;
  return out;
}

double capacity(double power, double path_loss, std::complex<double> h, double bandwidth,
                double noise_density) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(noise_density > 0.0)) throw std::invalid_argument("noise density must be positive");
  const double snr = power * path_loss * path_loss * std::norm(h) / (bandwidth * noise_density);
  return bandwidth * std::log2(1.0 + snr);
}

double success_probability(double theta, double bandwidth, int participants, double power,
                           double path_loss, double noise_density, PowerConvention convention) {
  if (!(theta >= 0.0)) throw std::invalid_argument("theta must be nonnegative");
  if (participants < 1) throw std::invalid_argument("participant count must be positive");
  const double exponent = bandwidth * noise_density * theta /
                          (mean_gain(convention) * participants * power * path_loss * path_loss);
  return std::exp(-exponent);
}

double truncation_probability(double gamma_th, PowerConvention convention) {
  if (!(gamma_th >= 0.0)) throw std::invalid_argument("gamma_th must be nonnegative");
  return std::exp(-gamma_th / mean_gain(convention));
}

}  // namespace wfl::channel
