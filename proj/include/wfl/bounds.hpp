#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wfl/task.hpp"
#include "wfl/training.hpp"

namespace wfl::bounds {

enum class Paradigm { digital, analog };

/// Everything the closed-form convergence bounds depend on.
struct BoundInputs {
  AssumptionConstants constants;
  double eta = 0.01;
  std::vector<double> alphas;
  std::vector<double> inclusion;   // r_k
  std::vector<double> path_loss;   // L_k (amplitude)
  std::vector<double> success;     // p_k
  int bits = 8;
  double gamma_th = 0.5;
  double rho = 1.0;
  double bandwidth = 1e6;
  double noise_density = 1e-14;
  double p_max = 1e-3;
  std::size_t dimension = 1;
  double init_dist2 = 1.0;         // E|w0 - w*|^2
  // only used by the asymptotic rate constants and limits
  double theta = 1.0;
  int subbands = 1;
  int participants = 1;
};

void validate(const BoundInputs& in);

/// sum_k alpha_k / (p_k r_k)
double g_digital(std::span<const double> alphas, std::span<const double> inclusion,
                 std::span<const double> success);

/// E[xi^2] of the analog distortion for unit inclusion:
///   e^{gamma_th} + (1 - rho^2) E1(gamma_th) e^{2 gamma_th} / (2 rho^2)
double analog_distortion_moment(double gamma_th, double rho);

/// sum_k (alpha_k / r_k) c - 1 with c = analog_distortion_moment.
double g_analog(std::span<const double> alphas, std::span<const double> inclusion, double gamma_th,
                double rho);

/// d gamma^2 / (4 (2^b - 1)^2)
double phi_quant(std::size_t d, int bits, double gamma);

/// B N0 gamma^2 e^{2 gamma_th} / (2 P_max rho^2 gamma_th) max_k{alpha_k^2 / (r_k^2 L_k^2)}
double varphi(double bandwidth, double noise_density, double gamma, double gamma_th, double rho,
              double p_max, std::span<const double> alphas, std::span<const double> inclusion,
              std::span<const double> path_loss);

/// mu / (2 L^2 g)
double max_learning_rate(const AssumptionConstants& constants, double g_value);

double amplification(const BoundInputs& in, Paradigm paradigm);
/// 1 - eta mu + 2 eta^2 L^2 g
double contraction(const BoundInputs& in, Paradigm paradigm);
bool eta_feasible(const BoundInputs& in, Paradigm paradigm);

/// Bound on E[F(w_{m+1})] - F(w*) for m = 0 .. rounds-1.
std::vector<double> gap_bound_trajectory(const BoundInputs& in, Paradigm paradigm, std::size_t rounds);
double gap_bound_at(const BoundInputs& in, Paradigm paradigm, std::size_t m);

double limit_gap_digital(const BoundInputs& in);
double limit_gap_analog(const BoundInputs& in);
double limit_gap(const BoundInputs& in, Paradigm paradigm);

/// High-SNR limits for uniform alpha_k = 1/K, r_k = N/K.
double asymptote_digital(const BoundInputs& in);
double asymptote_analog(const BoundInputs& in);

struct RateConstants {
  double epsilon = 0.0;   // max_k B N0 theta / (2 N L_k^2)
  double epsilon1 = 0.0;  // B N0 / (2 P L^2), weakest device
  double epsilon2 = 0.0;  // (b + 1) / M
};

RateConstants rate_constants(const BoundInputs& in);

struct BoundReport {
  double g_d = 0.0;
  double g_a = 0.0;
  double c = 0.0;
  double phi = 0.0;
  double varphi = 0.0;
  double varphi_d_scaled = 0.0;  // d * varphi, the noise energy of the worst-case scaling
  double contraction_d = 0.0;
  double contraction_a = 0.0;
  double max_eta_d = 0.0;
  double max_eta_a = 0.0;
  bool digital_valid = false;
  bool analog_valid = false;
  std::vector<double> trajectory_d;
  std::vector<double> trajectory_a;
  double limit_d = 0.0;
  double limit_a = 0.0;
  double asymptote_d = 0.0;
  double asymptote_a = 0.0;
  RateConstants rates;
};

/// Evaluates every bound quantity; a paradigm whose learning-rate hypothesis
/// fails gets NaN limits and an empty trajectory instead of an exception.
BoundReport evaluate(const BoundInputs& in, std::size_t rounds);

enum class TransportKind { ideal, digital, analog };

struct TransportSamples {
  TransportKind kind = TransportKind::ideal;
  std::vector<Vector> estimates;
  std::vector<double> expected_noise_energy;  // analog only, one per estimate
};

struct VarianceDiagnostic {
  std::size_t samples = 0;
  double empirical_mse = 0.0;       // mean |g_hat - g|^2
  double b2 = 0.0;                  // sum alpha |grad F_k|^2 - |grad F|^2
  double b2_expansion = 0.0;        // sum alpha |grad F_k - grad F|^2
  double b3_bound = 0.0;            // 2 L^2 |w - w*|^2 + 2 L^2 delta^2
  double participation_only = 0.0;  // sum alpha (1/r - 1) |grad F_k|^2
  double b1_bound = 0.0;            // verbatim constants
  double b1_bound_d_scaled = 0.0;   // analog noise term scaled by d
  double noise_verbatim = 0.0;
  double noise_d_scaled = 0.0;
  double noise_empirical = 0.0;     // mean d B N0 / (2 zeta^2) over the samples
  double analytic_bound = 0.0;      // b1 + b2
  double analytic_bound_d_scaled = 0.0;
  bool dominated = false;
  bool dominated_d_scaled = false;
};

inline constexpr std::size_t kMinVarianceSamples = 1000;

VarianceDiagnostic variance_decomposition(const LearningTask& task, const ModelState& state,
                                          const TransportSamples& samples, const BoundInputs& in);

}  // namespace wfl::bounds
