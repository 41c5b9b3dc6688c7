#include "wfl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wfl/expint.hpp"

namespace wfl::bounds {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("per-device vectors differ in length");
  if (a.empty()) throw std::invalid_argument("per-device vectors are empty");
}

void check_probabilities(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!(x > 0.0 && x <= 1.0)) throw std::domain_error(std::string(what) + " must lie in (0, 1]");
}

// eta (L a + 2 L^3 delta^2 b) / (2 mu - 4 eta L^2 g)
double limit_term(const BoundInputs& in, double additive, double g) {
  const auto& k = in.constants;
  const double denominator = 2.0 * k.mu - 4.0 * in.eta * k.L * k.L * g;
  if (!(denominator > 0.0)) throw std::domain_error("learning rate violates the convergence hypothesis");
  return in.eta * additive / denominator;
}

}  // namespace

void validate(const BoundInputs& in) {
  if (!(in.eta > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(in.constants.mu > 0.0 && in.constants.mu <= in.constants.L))
    throw std::invalid_argument("need 0 < mu <= L");
  check_same_length(in.alphas, in.inclusion);
  check_probabilities(in.inclusion, "inclusion probabilities");
  if (!in.path_loss.empty()) check_same_length(in.alphas, in.path_loss);
  if (!in.success.empty()) {
    check_same_length(in.alphas, in.success);
    check_probabilities(in.success, "success probabilities");
  }
  if (!(in.init_dist2 >= 0.0)) throw std::invalid_argument("initial distance must be nonnegative");
}

double g_digital(std::span<const double> alphas, std::span<const double> inclusion,
                 std::span<const double> success) {
  check_same_length(alphas, inclusion);
  check_same_length(alphas, success);
  check_probabilities(inclusion, "inclusion probabilities");
  check_probabilities(success, "success probabilities");
  double total = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) total += alphas[k] / (success[k] * inclusion[k]);
  return total;
}

double analog_distortion_moment(double gamma_th, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::domain_error("rho must lie in (0, 1]");
  if (!(gamma_th >= 0.0)) throw std::domain_error("gamma_th must be nonnegative");
  const double base = std::exp(gamma_th);
  if (rho == 1.0) return base;
  if (gamma_th == 0.0) throw std::domain_error("E1(0) diverges: gamma_th = 0 requires rho = 1");
  return base + (1.0 - rho * rho) * exp_integral_e1(gamma_th) * std::exp(2.0 * gamma_th) / (2.0 * rho * rho);
}

double g_analog(std::span<const double> alphas, std::span<const double> inclusion, double gamma_th,
                double rho) {
  check_same_length(alphas, inclusion);
  check_probabilities(inclusion, "inclusion probabilities");
  const double c = analog_distortion_moment(gamma_th, rho);
  double weight = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) weight += alphas[k] / inclusion[k];
  return weight * c - 1.0;
}

double phi_quant(std::size_t d, int bits, double gamma) {
  if (bits < 1) throw std::invalid_argument("need at least one bit");
  const double intervals = std::ldexp(1.0, bits) - 1.0;
  return static_cast<double>(d) * gamma * gamma / (4.0 * intervals * intervals);
}

double varphi(double bandwidth, double noise_density, double gamma, double gamma_th, double rho,
              double p_max, std::span<const double> alphas, std::span<const double> inclusion,
              std::span<const double> path_loss) {
  if (!(gamma_th > 0.0)) throw std::domain_error("varphi needs gamma_th > 0");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::domain_error("rho must lie in (0, 1]");
  check_same_length(alphas, inclusion);
  check_same_length(alphas, path_loss);
  double worst = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const double ratio = alphas[k] / (inclusion[k] * path_loss[k]);
    worst = std::max(worst, ratio * ratio);
  }
  return bandwidth * noise_density * gamma * gamma * std::exp(2.0 * gamma_th) /
         (2.0 * p_max * rho * rho * gamma_th) * worst;
}

double max_learning_rate(const AssumptionConstants& constants, double g_value) {
  if (!(g_value > 0.0)) throw std::domain_error("amplification factor must be positive");
  return constants.mu / (2.0 * constants.L * constants.L * g_value);
}

double amplification(const BoundInputs& in, Paradigm paradigm) {
  return paradigm == Paradigm::digital ? g_digital(in.alphas, in.inclusion, in.success)
                                       : g_analog(in.alphas, in.inclusion, in.gamma_th, in.rho);
}

double contraction(const BoundInputs& in, Paradigm paradigm) {
  const double g = amplification(in, paradigm);
  const auto& k = in.constants;
  return 1.0 - in.eta * k.mu + 2.0 * in.eta * in.eta * k.L * k.L * g;
}

bool eta_feasible(const BoundInputs& in, Paradigm paradigm) {
  const auto& k = in.constants;
  return 2.0 * k.mu - 4.0 * in.eta * k.L * k.L * amplification(in, paradigm) > 0.0;
}

double limit_gap_digital(const BoundInputs& in) {
  const auto& k = in.constants;
  const double g = g_digital(in.alphas, in.inclusion, in.success);
  const double phi = phi_quant(in.dimension, in.bits, k.gamma);
  return limit_term(in, (k.L * phi + 2.0 * k.L * k.L * k.L * k.delta * k.delta) * g, g);
}

double limit_gap_analog(const BoundInputs& in) {
  const auto& k = in.constants;
  const double g = g_analog(in.alphas, in.inclusion, in.gamma_th, in.rho);
  const double noise = varphi(in.bandwidth, in.noise_density, k.gamma, in.gamma_th, in.rho, in.p_max,
                              in.alphas, in.inclusion, in.path_loss);
  return limit_term(in, k.L * noise + 2.0 * k.L * k.L * k.L * k.delta * k.delta * g, g);
}

double limit_gap(const BoundInputs& in, Paradigm paradigm) {
  return paradigm == Paradigm::digital ? limit_gap_digital(in) : limit_gap_analog(in);
}

double gap_bound_at(const BoundInputs& in, Paradigm paradigm, std::size_t m) {
  const double limit = limit_gap(in, paradigm);
  const double factor = contraction(in, paradigm);
  return 0.5 * in.constants.L * std::pow(factor, static_cast<double>(m + 1)) * in.init_dist2 + limit;
}

std::vector<double> gap_bound_trajectory(const BoundInputs& in, Paradigm paradigm, std::size_t rounds) {
  const double limit = limit_gap(in, paradigm);
  const double factor = contraction(in, paradigm);
  std::vector<double> out(rounds);
  for (std::size_t m = 0; m < rounds; ++m)
    out[m] = 0.5 * in.constants.L * std::pow(factor, static_cast<double>(m + 1)) * in.init_dist2 + limit;
  return out;
}

double asymptote_digital(const BoundInputs& in) {
  const auto& k = in.constants;
  const double K = static_cast<double>(in.alphas.size());
  const double N = in.participants;
  const double phi = phi_quant(in.dimension, in.bits, k.gamma);
  const double denominator = 2.0 * k.mu * N - 4.0 * in.eta * k.L * k.L * K;
  if (!(denominator > 0.0)) throw std::domain_error("learning rate violates the convergence hypothesis");
  return in.eta * (k.L * phi + 2.0 * k.L * k.L * k.L * k.delta * k.delta) * K / denominator;
}

double asymptote_analog(const BoundInputs& in) {
  const auto& k = in.constants;
  const double K = static_cast<double>(in.alphas.size());
  const double N = in.participants;
  const double excess = K * analog_distortion_moment(in.gamma_th, in.rho) - N;
  const double denominator = 2.0 * k.mu * N - 4.0 * in.eta * k.L * k.L * excess;
  if (!(denominator > 0.0)) throw std::domain_error("learning rate violates the convergence hypothesis");
  return 2.0 * in.eta * k.L * k.L * k.L * k.delta * k.delta * excess / denominator;
}

RateConstants rate_constants(const BoundInputs& in) {
  if (in.path_loss.empty()) throw std::invalid_argument("rate constants need path losses");
  const double weakest = *std::min_element(in.path_loss.begin(), in.path_loss.end());
  RateConstants out;
  out.epsilon = in.bandwidth * in.noise_density * in.theta / (2.0 * in.participants * weakest * weakest);
  out.epsilon1 = in.bandwidth * in.noise_density / (2.0 * in.p_max * weakest * weakest);
  out.epsilon2 = static_cast<double>(in.bits + 1) / in.subbands;
  return out;
}

BoundReport evaluate(const BoundInputs& in, std::size_t rounds) {
  validate(in);
  BoundReport r;
  const auto& k = in.constants;
  r.phi = phi_quant(in.dimension, in.bits, k.gamma);
  r.rates = rate_constants(in);

  r.g_d = g_digital(in.alphas, in.inclusion, in.success);
  r.max_eta_d = max_learning_rate(k, r.g_d);
  r.contraction_d = contraction(in, Paradigm::digital);
  r.digital_valid = eta_feasible(in, Paradigm::digital);
  r.limit_d = r.asymptote_d = kNaN;
  if (r.digital_valid) {
    r.trajectory_d = gap_bound_trajectory(in, Paradigm::digital, rounds);
    r.limit_d = limit_gap_digital(in);
    try {
      r.asymptote_d = asymptote_digital(in);
    } catch (const std::domain_error&) {
    }
  }

  r.g_a = r.c = r.varphi = r.varphi_d_scaled = r.max_eta_a = r.contraction_a = kNaN;
  r.limit_a = r.asymptote_a = kNaN;
  try {
    r.c = analog_distortion_moment(in.gamma_th, in.rho);
    r.g_a = g_analog(in.alphas, in.inclusion, in.gamma_th, in.rho);
    r.varphi = varphi(in.bandwidth, in.noise_density, k.gamma, in.gamma_th, in.rho, in.p_max, in.alphas,
                      in.inclusion, in.path_loss);
    r.varphi_d_scaled = static_cast<double>(in.dimension) * r.varphi;
    r.contraction_a = contraction(in, Paradigm::analog);
    r.max_eta_a = max_learning_rate(k, r.g_a);
    r.analog_valid = eta_feasible(in, Paradigm::analog);
  } catch (const std::domain_error&) {
    r.analog_valid = false;
  }
  if (r.analog_valid) {
    r.trajectory_a = gap_bound_trajectory(in, Paradigm::analog, rounds);
    r.limit_a = limit_gap_analog(in);
    try {
      r.asymptote_a = asymptote_analog(in);
    } catch (const std::domain_error&) {
    }
  }
  return r;
}

VarianceDiagnostic variance_decomposition(const LearningTask& task, const ModelState& state,
                                          const TransportSamples& samples, const BoundInputs& in) {
  if (samples.estimates.size() < kMinVarianceSamples)
    throw std::invalid_argument("variance decomposition needs at least 1000 transport samples");
  if (samples.kind == TransportKind::analog &&
      samples.expected_noise_energy.size() != samples.estimates.size())
    throw std::invalid_argument("analog samples need one noise energy per estimate");

  const std::size_t K = task.num_devices();
  const auto& k = task.constants();
  VarianceDiagnostic out;
  out.samples = samples.estimates.size();

  std::vector<Vector> locals;
  for (std::size_t i = 0; i < K; ++i) locals.push_back(task.local_gradient(i, state.weights));
  const std::vector<double> alphas = task.alphas();
  const Vector g = global_gradient(locals, alphas);

  double mse = 0.0;
  for (const auto& est : samples.estimates) mse += (est - g).squaredNorm();
  out.empirical_mse = mse / static_cast<double>(out.samples);

  double weighted_sq = 0.0;
  double expansion = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double r = task.device(i).inclusion;
    weighted_sq += alphas[i] * locals[i].squaredNorm();
    expansion += alphas[i] * (locals[i] - g).squaredNorm();
    out.participation_only += alphas[i] * (1.0 / r - 1.0) * locals[i].squaredNorm();
  }
  out.b2 = weighted_sq - g.squaredNorm();
  out.b2_expansion = expansion;

  const double dist2 = (state.weights - task.global_optimum()).squaredNorm();
  out.b3_bound = 2.0 * k.L * k.L * dist2 + 2.0 * k.L * k.L * k.delta * k.delta;

  switch (samples.kind) {
    case TransportKind::ideal:
      out.b1_bound = out.b1_bound_d_scaled = out.participation_only;
      break;
    case TransportKind::digital: {
      const double phi = phi_quant(task.dimension(), in.bits, k.gamma);
      double total = 0.0;
      for (std::size_t i = 0; i < K; ++i) {
        const double pr = in.success.at(i) * task.device(i).inclusion;
        total += phi * alphas[i] / pr + alphas[i] * (1.0 / pr - 1.0) * out.b3_bound;
      }
      out.b1_bound = out.b1_bound_d_scaled = total;
      break;
    }
    case TransportKind::analog: {
      const double c = analog_distortion_moment(in.gamma_th, in.rho);
      double distortion = 0.0;
      for (std::size_t i = 0; i < K; ++i)
        distortion += alphas[i] * (c / task.device(i).inclusion - 1.0) * out.b3_bound;
      double noise = 0.0;
      for (double e : samples.expected_noise_energy) noise += e;
      out.noise_empirical = noise / static_cast<double>(out.samples);
      out.noise_verbatim = kNaN;
      out.noise_d_scaled = kNaN;
      if (in.gamma_th > 0.0) {
        out.noise_verbatim = varphi(in.bandwidth, in.noise_density, k.gamma, in.gamma_th, in.rho, in.p_max,
                                    alphas, task.inclusions(), task.path_losses());
        out.noise_d_scaled = static_cast<double>(task.dimension()) * out.noise_verbatim;
      }
      out.b1_bound = distortion + out.noise_verbatim;
      out.b1_bound_d_scaled = distortion + out.noise_d_scaled;
      break;
    }
  }
  out.analytic_bound = out.b1_bound + out.b2;
  out.analytic_bound_d_scaled = out.b1_bound_d_scaled + out.b2;
  out.dominated = out.empirical_mse <= out.analytic_bound;
  out.dominated_d_scaled = out.empirical_mse <= out.analytic_bound_d_scaled;
  return out;
}

}  // namespace wfl::bounds
