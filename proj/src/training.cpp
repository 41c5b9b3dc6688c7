#include <stdexcept>

#include "wfl/training.hpp"

namespace wfl {

Vector global_gradient(std::span<const Vector> locals, std::span<const double> alphas) {
  if (locals.size() != alphas.size()) throw std::invalid_argument("gradient and weight counts differ");
  if (locals.empty()) throw std::invalid_argument("no local gradients");
  Vector out = Vector::Zero(locals.front().size());
  for (std::size_t k = 0; k < locals.size(); ++k) {
    if (locals[k].size() != out.size()) throw std::invalid_argument("local gradients differ in length");
    out += alphas[k] * locals[k];
  }
  return out;
}

ModelState sgd_step(const ModelState& state, const Vector& g_hat, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (g_hat.size() != state.weights.size()) throw std::invalid_argument("gradient has the wrong length");
  if (!g_hat.allFinite()) throw std::domain_error("non-finite gradient estimate");
  return ModelState{state.round + 1, state.weights - eta * g_hat};
}

double optimality_gap(const LearningTask& task, const ModelState& state) {
  return task.excess_loss(state.weights);
}

}  // namespace wfl
