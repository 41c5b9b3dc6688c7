#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "support.hpp"
#include "wfl/digital.hpp"
#include "wfl/errors.hpp"

using namespace wfl;
using namespace wfl::digital;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

std::vector<std::size_t> everyone(std::size_t K) {
  std::vector<std::size_t> out(K);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

std::vector<channel::ChannelRealization> draw_all(std::size_t K, Rng& rng) {
  std::vector<channel::ChannelRealization> out(K);
  for (auto& c : out) c = channel::draw_channel(1.0, channel::PowerConvention::mean2, rng);
  return out;
}

DigitalConfig base_config(int participants) {
  DigitalConfig cfg;
  cfg.radio.bandwidth = 1e6;
  cfg.radio.noise_density = 1e-14;
  cfg.radio.p_max = 1e-3;
  cfg.radio.subbands = 20;
  cfg.participants = participants;
  cfg.bits = 8;
  cfg.t_max = 1.0;
  cfg.theta = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("quantize: grid points reconstruct exactly") {
  Rng rng(1);
  // b = 2 gives three intervals on [1, 4]: grid 1, 2, 3, 4
  const Vector g = vec({1.0, -2.0, 3.0, -4.0, 2.0});
  for (int i = 0; i < 100; ++i) CHECK(dequantize(quantize(g, 2, rng)) == g);
}

TEST_CASE("quantize: one-bit rounding probabilities") {
  Rng rng(2);
  const Vector g = vec({0.0, 1.0, 0.3});
  testing::Moments mean;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = dequantize(quantize(g, 1, rng))[2];
    REQUIRE((x == 0.0 || x == 1.0));
    mean.add(x);
  }
  CHECK(std::abs(mean.mean - 0.3) <= 3.0 * std::sqrt(0.21 / n));
}

TEST_CASE("quantize: error within one step and variance within a quarter step squared") {
  Rng rng(3);
  for (int bits : {1, 2, 3, 8}) {
    const std::size_t grid = 1000;
    for (std::size_t j = 0; j <= grid; ++j) {
      const double x = static_cast<double>(j) / grid;
      const Vector g = vec({0.0, 1.0, x, -x});
      double sum = 0, sum2 = 0;
      const int reps = 200;
      double step = 0;
      for (int r = 0; r < reps; ++r) {
        const auto q = quantize(g, bits, rng);
        step = q.step();
        const Vector e = dequantize(q) - g;
        REQUIRE(e.cwiseAbs().maxCoeff() <= step * (1 + 1e-12));
        sum += e[2];
        sum2 += e[2] * e[2];
      }
      const double m = sum / reps;
      CHECK(sum2 / reps - m * m <= step * step / 4 * (1 + 1e-12));
    }
  }
}

TEST_CASE("quantize: degenerate and edge vectors") {
  Rng rng(4);
  const Vector same = vec({-0.5, 0.5, 0.5});
  const auto q = quantize(same, 4, rng);
  CHECK(q.g_min == q.g_max);
  CHECK(dequantize(q) == same);
  const Vector zeros = Vector::Zero(3);
  const auto z = quantize(zeros, 3, rng);
  CHECK(std::all_of(z.signs.begin(), z.signs.end(), [](auto s) { return s == 1; }));
  CHECK(dequantize(z) == zeros);
  CHECK_THROWS_AS(quantize(same, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(quantize(same, kMaxBits + 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(quantize(vec({1.0, NAN}), 4, rng), std::domain_error);
}

TEST_CASE("dequantize: zero levels give g_min and random round trips stay within a step") {
  QuantizedGradient q;
  q.g_min = 0.25;
  q.g_max = 2.0;
  q.bits = 3;
  q.levels.assign(4, 0);
  q.signs.assign(4, 1);
  CHECK(dequantize(q) == Vector::Constant(4, 0.25));

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Vector g(16);
    for (Eigen::Index i = 0; i < 16; ++i) g[i] = rng.normal();
    const auto qg = quantize(g, 1 + static_cast<int>(rng.below(12)), rng);
    CHECK((dequantize(qg) - g).cwiseAbs().maxCoeff() <= qg.step() * (1 + 1e-12));
  }
}

TEST_CASE("payload_bits: d (b + 1) + q") {
  CHECK(payload_bits(1, 1, 0) == 2);
  CHECK(payload_bits(23860, 8, 64) == 214804);
  CHECK(payload_bits(77, 0, 0) == 77);
}

TEST_CASE("min_theta and tx_delay_digital: closed-form values") {
  CHECK(min_theta(10, 100, 8, 1e6, 9e-3) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(min_theta(1, 1, 1, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(min_theta(10, 100, 8, 1e6, 1e12) < 1e-8);
  CHECK(tx_delay_digital(10, 100, 8, 1e6, 1.0) == doctest::Approx(9e-3).epsilon(1e-14));
  CHECK(tx_delay_digital(10, 100, 8, 1e6, 3.0) == doctest::Approx(4.5e-3).epsilon(1e-14));
  CHECK(tx_delay_digital(10, 23860, 8, 1e6, 1.0) == doctest::Approx(2.1474).epsilon(1e-12));
  CHECK_THROWS_AS(min_theta(10, 100, 8, 1e6, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tx_delay_digital(10, 100, 8, 1e6, 0.0), std::invalid_argument);
}

TEST_CASE("min_theta: the resulting delay never exceeds the target") {
  Rng rng(6);
  for (int trial = 0; trial < 5000; ++trial) {
    const int N = 1 + static_cast<int>(rng.below(20));
    const std::size_t d = 1 + rng.below(5000);
    const int b = 1 + static_cast<int>(rng.below(16));
    const double B = 1e5 * (1 + 20 * rng.uniform());
    const double t = 1e-3 + rng.uniform();
    const double theta = min_theta(N, d, b, B, t);
    CHECK(tx_delay_digital(N, d, b, B, theta) <= t);
  }
}

TEST_CASE("digital_round: reliable full participation with fine quantization") {
  const auto task = testing::small_quadratic(6, 4, 0.3, 3.0);
  auto cfg = base_config(4);
  cfg.radio.noise_density = 1e-30;
  cfg.bits = 24;
  cfg.outage = OutageMode::analytic;
  Rng rng(7);
  const auto channels = draw_all(4, rng);
  const ModelState state{0, task.initial_weights()};
  auto t = task;
  t.assign_inclusions(std::vector<double>(4, 1.0));
  const auto out = digital_round(t, state, everyone(4), channels, cfg, {1, 0, 1});
  CHECK(out.successes == 4);
  double worst_step = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const Vector g = t.local_gradient(k, state.weights);
    worst_step = std::max(worst_step, (g.cwiseAbs().maxCoeff() - g.cwiseAbs().minCoeff()) / (std::ldexp(1.0, 24) - 1));
  }
  CHECK((out.g_hat - t.global_gradient(state.weights)).cwiseAbs().maxCoeff() <= worst_step * (1 + 1e-9));
}

TEST_CASE("digital_round: single device at half success probability is unbiased") {
  Rng task_rng(8);
  QuadraticTaskSpec spec;
  spec.dimension = 2;
  spec.devices = 1;
  spec.conditioning = 2.0;
  auto task = make_quadratic_task(spec, task_rng);
  auto cfg = base_config(1);
  cfg.theta = 1.0;
  // B N0 theta / (2 P L^2) = ln 2
  task.assign_path_losses({std::sqrt(1e6 * 1e-14 / (2 * 1e-3 * std::numbers::ln2))});
  const ModelState state{0, task.initial_weights()};
  const Vector g = task.local_gradient(0, state.weights);

  const std::size_t n = 100000;
  std::vector<testing::Moments> coord(2);
  testing::Moments xi;
  for (std::size_t m = 0; m < n; ++m) {
    Rng ch(1000 + m);
    const auto channels = draw_all(1, ch);
    const auto out = digital_round(task, state, std::vector<std::size_t>{0}, channels, cfg, {3, m, 1});
    REQUIRE(out.success_probability[0] == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE((out.xi[0] == 0.0 || out.xi[0] == doctest::Approx(2.0).epsilon(1e-12)));
    xi.add(out.xi[0]);
    if (out.successes == 0) REQUIRE(out.g_hat.isZero(0.0));
    for (int i = 0; i < 2; ++i) coord[i].add(out.g_hat[i]);
  }
  CHECK(std::abs(xi.mean - 1.0) <= 4 * xi.stderr_mean());
  for (int i = 0; i < 2; ++i) CHECK(std::abs(coord[i].mean - g[i]) <= 4 * coord[i].stderr_mean());
}

TEST_CASE("digital_round: total outage yields a zero estimate") {
  const auto task = testing::small_quadratic(3, 4, 0.3, 3.0);
  auto cfg = base_config(2);
  cfg.radio.p_max = 1e-30;
  Rng rng(9);
  const auto channels = draw_all(4, rng);
  const auto out = digital_round(task, {0, task.initial_weights()}, std::vector<std::size_t>{0, 2}, channels, cfg,
                                 {1, 0, 1});
  CHECK(out.successes == 0);
  CHECK(out.g_hat.isZero(0.0));
  CHECK(out.transmit_power == cfg.radio.p_max);
}

TEST_CASE("digital_round: infeasible rate and malformed inputs") {
  const auto task = testing::small_quadratic(3, 4, 0.3, 3.0);
  auto cfg = base_config(2);
  cfg.t_max = 1e-6;
  cfg.theta = 1.0;
  Rng rng(10);
  const auto channels = draw_all(4, rng);
  const ModelState state{0, task.initial_weights()};
  const std::vector<std::size_t> two{0, 1};
  CHECK_THROWS_AS(digital_round(task, state, two, channels, cfg, {1, 0, 1}), InfeasibleConfig);
  cfg.t_max = 1.0;
  CHECK_THROWS_AS(digital_round(task, state, std::vector<std::size_t>{0}, channels, cfg, {1, 0, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(digital_round(task, state, two, std::span(channels).first(2), cfg, {1, 0, 1}),
                  std::invalid_argument);
}
