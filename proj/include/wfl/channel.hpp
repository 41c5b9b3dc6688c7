#pragma once

#include <complex>

#include "wfl/rng.hpp"

namespace wfl::channel {

/// Expected small-scale power gain E|h|^2 assumed by a closed form.
/// mean2 reproduces the digital outage law verbatim, mean1 the analog
/// truncation probability e^{-gamma_th}.
enum class PowerConvention { mean1, mean2 };

double mean_gain(PowerConvention convention);

struct ChannelRealization {
  std::complex<double> h_hat;  // estimate available at the device
  std::complex<double> h;      // true small-scale fading
  std::complex<double> v;      // estimation error component
};

struct RadioParams {
  double bandwidth = 1e6;     // B, Hz
  double noise_density = 0.0; // N0, W/Hz
  double p_max = 1e-3;        // W
  int subbands = 1;           // M
  double rho = 1.0;
};

void validate(const RadioParams& radio);

/// h = rho h_hat + sqrt(1 - rho^2) v, with h_hat and v independent CN(0, mean).
ChannelRealization draw_channel(double rho, PowerConvention convention, Rng& rng);

/// B_k log2(1 + P L^2 |h|^2 / (B_k N0)), bits/s.
double capacity(double power, double path_loss, std::complex<double> h, double bandwidth,
                double noise_density);

/// Pr{R <= C_k} at fixed rate R = (B/N) log2(1 + theta) with P_k = power.
double success_probability(double theta, double bandwidth, int participants, double power,
                           double path_loss, double noise_density, PowerConvention convention);

/// Pr{|h_hat|^2 >= gamma_th}
double truncation_probability(double gamma_th, PowerConvention convention);

}  // namespace wfl::channel
