#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wfl/rng.hpp"
#include "wfl/task.hpp"

namespace wfl {

struct ModelState {
  std::size_t round = 0;
  Vector weights;
};

/// Systematic PPS sampling over a random permutation of the devices. Device k
/// is selected with probability exactly r[k]; exactly N distinct devices are
/// returned, in increasing index order.
std::vector<std::size_t> sample_participants(std::span<const double> r, std::size_t N, Rng& rng);

/// sum_k alpha_k g^k
Vector global_gradient(std::span<const Vector> locals, std::span<const double> alphas);

ModelState sgd_step(const ModelState& state, const Vector& g_hat, double eta);

double optimality_gap(const LearningTask& task, const ModelState& state);

}  // namespace wfl
