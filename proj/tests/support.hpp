#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "wfl/config.hpp"
#include "wfl/rng.hpp"
#include "wfl/task.hpp"

namespace testing {

/// |freq - p| within z binomial standard deviations.
inline bool within_binomial(std::size_t hits, std::size_t n, double p, double z) {
  const double freq = static_cast<double>(hits) / static_cast<double>(n);
  return std::abs(freq - p) <= z * std::sqrt(p * (1.0 - p) / static_cast<double>(n)) + 1e-15;
}

/// Running mean and variance (Welford).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stderr_mean() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

inline wfl::LearningTask small_quadratic(std::size_t d, std::size_t K, double heterogeneity, double conditioning,
                                         std::uint64_t seed = 11) {
  wfl::Rng rng(seed);
  return wfl::make_quadratic_task(d, K, heterogeneity, conditioning, rng);
}

/// Small configuration that runs in milliseconds.
inline wfl::harness::ExperimentConfig quick_config() {
  wfl::harness::ExperimentConfig cfg;
  cfg.k = 6;
  cfg.n = 3;
  cfg.m = 6;
  cfg.d = 4;
  cfg.rounds = 20;
  cfg.seeds = {1, 2};
  cfg.threads = 1;
  return cfg;
}

}  // namespace testing
