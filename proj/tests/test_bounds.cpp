#include <doctest.h>

#include <cmath>
#include <numeric>

#include "expint_oracle.hpp"
#include "support.hpp"
#include "wfl/analog.hpp"
#include "wfl/bounds.hpp"
#include "wfl/digital.hpp"

using namespace wfl;
using namespace wfl::bounds;

namespace {

BoundInputs uniform_inputs(std::size_t K = 20, int N = 10, double p = 0.9) {
  BoundInputs in;
  in.constants = {0.5, 1.0, 2.0, 0.1};
  in.eta = 0.01;
  in.alphas.assign(K, 1.0 / K);
  in.inclusion.assign(K, static_cast<double>(N) / K);
  in.path_loss.assign(K, 0.01);
  in.success.assign(K, p);
  in.bits = 8;
  in.gamma_th = 0.5;
  in.rho = 1.0;
  in.bandwidth = 1e6;
  in.noise_density = 1e-14;
  in.p_max = 1e-3;
  in.dimension = 32;
  in.init_dist2 = 1.0;
  in.theta = 21.6;
  in.subbands = 20;
  in.participants = N;
  return in;
}

std::vector<std::size_t> everyone(std::size_t K) {
  std::vector<std::size_t> out(K);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

}  // namespace

TEST_CASE("g_digital: closed-form values") {
  const std::vector<double> one{1.0}, alphas(20, 0.05), r(20, 0.5), p(20, 0.9);
  CHECK(g_digital(one, one, one) == 1.0);
  CHECK(g_digital(alphas, r, p) == doctest::Approx(20.0 / (10 * 0.9)).epsilon(1e-14));
  CHECK(g_digital(alphas, r, p) == doctest::Approx(2.2222).epsilon(1e-4));
}

TEST_CASE("g_analog: closed-form values against the quadrature oracle") {
  const std::vector<double> alphas(20, 0.05), r(20, 0.5);
  CHECK(g_analog(alphas, r, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g_analog(alphas, r, 0.5, 1.0) == doctest::Approx(2 * std::exp(0.5) - 1).epsilon(1e-14));
  const double e1 = static_cast<double>(testing::e1_quadrature(0.5L));
  const double c = std::exp(0.5) + 0.19 * e1 * std::exp(1.0) / (2 * 0.81);
  CHECK(analog_distortion_moment(0.5, 0.9) == doctest::Approx(c).epsilon(1e-13));
  CHECK(analog_distortion_moment(0.5, 0.9) == doctest::Approx(1.82725).epsilon(5e-5));
  CHECK(g_analog(alphas, r, 0.5, 0.9) == doctest::Approx(2 * c - 1).epsilon(1e-13));
  CHECK_THROWS_AS(analog_distortion_moment(0.0, 0.9), std::domain_error);
}

TEST_CASE("phi_quant and varphi: closed-form values and scaling") {
  CHECK(phi_quant(4, 1, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(phi_quant(4, 1, 4.0) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(phi_quant(4, 32, 2.0) < 1e-18);

  const std::vector<double> one{1.0};
  CHECK(varphi(1, 1, 1, 0.5, 1, 1, one, one, one) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(varphi(1, 1, 1, 0.5, 0.5, 1, one, one, one) ==
        doctest::Approx(4 * std::exp(1.0)).epsilon(1e-14));
  CHECK(varphi(1, 1, 1, 0.5, 1, 1e300, one, one, one) < 1e-299);
  CHECK_THROWS_AS(varphi(1, 1, 1, 0.0, 1, 1, one, one, one), std::domain_error);
}

TEST_CASE("max_learning_rate: mu / (2 L^2 g)") {
  CHECK(max_learning_rate({1, 1, 0, 0}, 1.0) == 0.5);
  CHECK(max_learning_rate({1, 1, 0, 0}, 2.0) == 0.25);
  CHECK(max_learning_rate({0.1, 1, 0, 0}, 2.0) == doctest::Approx(0.025).epsilon(1e-15));
}

TEST_CASE("gap_bound_trajectory: zero inputs give a zero trajectory") {
  auto in = uniform_inputs();
  in.init_dist2 = 0.0;
  in.constants.gamma = 0.0;
  in.constants.delta = 0.0;
  for (double v : gap_bound_trajectory(in, Paradigm::digital, 50)) CHECK(v == 0.0);
  CHECK(limit_gap_digital(in) == 0.0);
}

TEST_CASE("gap_bound_trajectory: agrees with the one-step recursion") {
  for (auto paradigm : {Paradigm::digital, Paradigm::analog}) {
    auto in = uniform_inputs();
    const double g = amplification(in, paradigm);
    in.eta = max_learning_rate(in.constants, g) / 2;
    const auto& k = in.constants;
    const double c = 1 - in.eta * k.mu + 2 * in.eta * in.eta * k.L * k.L * g;
    CHECK(contraction(in, paradigm) == doctest::Approx(c).epsilon(1e-15));

    const auto traj = gap_bound_trajectory(in, paradigm, 400);
    const double limit = limit_gap(in, paradigm);
    // transient part: u_0 = (L/2) c |w0 - w*|^2, u_{m+1} = c u_m
    double u = 0.5 * k.L * c * in.init_dist2;
    for (std::size_t m = 0; m < traj.size(); ++m) {
      CHECK(traj[m] == doctest::Approx(u + limit).epsilon(1e-12));
      if (m > 0) CHECK(traj[m] < traj[m - 1]);
      u *= c;
    }
  }
}

TEST_CASE("limit_gap: matches the far tail of the trajectory") {
  auto in = uniform_inputs();
  // pick eta so the digital contraction is 0.99
  const double g = amplification(in, Paradigm::digital);
  const auto& k = in.constants;
  const double a = 2 * k.L * k.L * g, b = -k.mu, c0 = 0.01;
  in.eta = (-b - std::sqrt(b * b - 4 * a * c0)) / (2 * a);
  CHECK(contraction(in, Paradigm::digital) == doctest::Approx(0.99).epsilon(1e-12));
  const double limit = limit_gap_digital(in);
  CHECK(std::abs(gap_bound_at(in, Paradigm::digital, 1000000) - limit) <= 1e-9 * limit);

  in.constants.gamma = 0.0;
  in.constants.delta = 0.0;
  CHECK(limit_gap_digital(in) == 0.0);
}

TEST_CASE("asymptotes: vanishing cases and consistency with the digital limit") {
  auto in = uniform_inputs();
  in.constants.delta = 0.0;
  CHECK(asymptote_analog(in) == 0.0);

  in = uniform_inputs(10, 10);
  in.gamma_th = 0.0;
  in.rho = 1.0;
  CHECK(asymptote_analog(in) == 0.0);

  in = uniform_inputs();
  in.success.assign(20, 1.0);
  CHECK(limit_gap_digital(in) == doctest::Approx(asymptote_digital(in)).epsilon(1e-12));
  in.p_max = 1e9;
  const double p = channel::success_probability(in.theta, in.bandwidth, in.participants, in.p_max, 0.01,
                                                in.noise_density, channel::PowerConvention::mean2);
  in.success.assign(20, p);
  CHECK(std::abs(limit_gap_digital(in) - asymptote_digital(in)) <= 1e-6 * asymptote_digital(in));
}

TEST_CASE("rate_constants: closed-form values") {
  BoundInputs in;
  in.constants = {1, 1, 1, 0};
  in.alphas = {1.0};
  in.inclusion = {1.0};
  in.path_loss = {1.0};
  in.success = {1.0};
  in.bandwidth = 1;
  in.noise_density = 1;
  in.p_max = 1;
  in.theta = 2;
  in.participants = 1;
  in.bits = 8;
  in.subbands = 10;
  const auto r = rate_constants(in);
  CHECK(r.epsilon == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.epsilon1 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.epsilon2 == doctest::Approx(0.9).epsilon(1e-15));
  in.participants = 2;
  CHECK(rate_constants(in).epsilon < r.epsilon);
}

TEST_CASE("evaluate: infeasible learning rate yields NaN limits and no trajectory") {
  auto in = uniform_inputs();
  in.eta = 10.0;
  const auto report = evaluate(in, 10);
  CHECK_FALSE(report.digital_valid);
  CHECK_FALSE(report.analog_valid);
  CHECK(report.trajectory_d.empty());
  CHECK(std::isnan(report.limit_a));
  CHECK_THROWS_AS(limit_gap_digital(in), std::domain_error);

  in.eta = 0.01;
  const auto ok = evaluate(in, 10);
  CHECK(ok.digital_valid);
  CHECK(ok.trajectory_a.size() == 10);
  CHECK(ok.varphi_d_scaled == doctest::Approx(32 * ok.varphi).epsilon(1e-15));
}

TEST_CASE("variance_decomposition: ideal transport is pure participation variance") {
  auto task = testing::small_quadratic(4, 6, 0.4, 3.0);
  const ModelState state{0, task.initial_weights()};
  auto in = uniform_inputs(6, 3);
  std::vector<Vector> locals;
  for (std::size_t k = 0; k < 6; ++k) locals.push_back(task.local_gradient(k, state.weights));
  const Vector g = task.global_gradient(state.weights);

  task.assign_inclusions(std::vector<double>(6, 0.5));
  TransportSamples samples;
  Rng rng(4);
  for (int i = 0; i < 20000; ++i) {
    Vector est = Vector::Zero(4);
    for (auto k : sample_participants(task.inclusions(), 3, rng)) est += (task.device(k).alpha / 0.5) * locals[k];
    samples.estimates.push_back(est);
  }
  const auto diag = variance_decomposition(task, state, samples, in);
  CHECK(diag.b2 == doctest::Approx(diag.b2_expansion).epsilon(1e-9));
  // simple random sampling without replacement of n = 3 out of 6: mean of n draws
  double s2 = 0;
  for (const auto& l : locals) s2 += (l - g).squaredNorm();
  s2 /= 5.0;
  const double exact = (1.0 - 0.5) / 3.0 * s2;
  CHECK(diag.empirical_mse == doctest::Approx(exact).epsilon(0.05));
  CHECK(diag.empirical_mse <= diag.participation_only);
  CHECK(diag.dominated);

  task.assign_inclusions(std::vector<double>(6, 1.0));
  TransportSamples full;
  full.estimates.assign(1000, g);
  const auto exact_diag = variance_decomposition(task, state, full, in);
  CHECK(exact_diag.empirical_mse < 1e-24);
  CHECK(exact_diag.participation_only == 0.0);
  full.estimates.resize(999);
  CHECK_THROWS_AS(variance_decomposition(task, state, full, in), std::invalid_argument);
}

TEST_CASE("variance_decomposition: reliable digital transport stays within the quantization constant") {
  auto task = testing::small_quadratic(8, 4, 0.3, 3.0);
  task.assign_inclusions(std::vector<double>(4, 1.0));
  const ModelState state{0, task.initial_weights()};
  digital::DigitalConfig cfg;
  cfg.radio.noise_density = 1e-30;
  cfg.participants = 4;
  cfg.bits = 3;
  cfg.theta = 1.0;
  cfg.t_max = 1.0;
  cfg.outage = digital::OutageMode::analytic;
  auto in = uniform_inputs(4, 4, 1.0);
  in.constants = task.constants();
  in.bits = 3;
  in.dimension = 8;
  TransportSamples samples{TransportKind::digital, {}, {}};
  std::vector<channel::ChannelRealization> ch(4);
  for (std::size_t m = 0; m < 5000; ++m) {
    const auto out = digital::digital_round(task, state, everyone(4), ch, cfg, {9, m, 1});
    REQUIRE(out.successes == 4);
    samples.estimates.push_back(out.g_hat);
  }
  const auto diag = variance_decomposition(task, state, samples, in);
  CHECK(diag.empirical_mse <= phi_quant(8, 3, task.constants().gamma));
  CHECK(diag.dominated);
}

TEST_CASE("variance_decomposition: perfect analog transport leaves only receiver noise") {
  auto task = testing::small_quadratic(8, 4, 0.3, 3.0);
  task.assign_inclusions(std::vector<double>(4, 1.0));
  task.assign_path_losses(std::vector<double>(4, 0.001));
  const ModelState state{0, task.initial_weights()};
  analog::AnalogConfig cfg;
  cfg.radio.noise_density = 1e-14;
  cfg.gamma_th = 0.0;
  cfg.t_max = 1.0;
  auto in = uniform_inputs(4, 4);
  in.constants = task.constants();
  in.gamma_th = 0.0;
  in.dimension = 8;
  TransportSamples samples{TransportKind::analog, {}, {}};
  for (std::size_t m = 0; m < 20000; ++m) {
    Rng rng(m);
    std::vector<channel::ChannelRealization> ch(4);
    for (auto& c : ch) c = channel::draw_channel(1.0, channel::PowerConvention::mean1, rng);
    const auto out = analog::analog_round(task, state, everyone(4), ch, cfg, {10, m, 2});
    samples.estimates.push_back(out.g_hat);
    samples.expected_noise_energy.push_back(out.expected_noise_energy);
  }
  const auto diag = variance_decomposition(task, state, samples, in);
  // mse / noise is a weighted mean of chi-square(d)/d variables with weights
  // proportional to the per-round noise energy
  double w = 0, w2 = 0;
  for (double e : samples.expected_noise_energy) {
    w += e;
    w2 += e * e;
  }
  const double rel_sd = std::sqrt(2.0 / 8.0 * w2 / (w * w));
  CHECK(std::abs(diag.empirical_mse / diag.noise_empirical - 1.0) <= 4 * rel_sd);
  CHECK(std::isnan(diag.noise_verbatim));
}
