#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "wfl/rng.hpp"

namespace wfl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Constants of the strong-convexity / smoothness / bounded-gradient /
/// bounded-heterogeneity assumptions, as realized by a concrete task.
struct AssumptionConstants {
  double mu = 1.0;
  double L = 1.0;
  double gamma = 0.0;
  double delta = 0.0;
};

/// F_k(w) = 1/2 (w - w_k*)^T A (w - w_k*)
struct QuadraticLocal {
  Matrix hessian;
};

/// F_k(w) = mean_i log(1 + exp(-y_i x_i^T w)) + reg/2 |w|^2, labels in {-1, +1}.
struct LogisticLocal {
  Matrix features;  // one sample per row
  Vector labels;
  double regularization = 0.0;
};

struct DeviceProfile {
  double alpha = 0.0;
  double inclusion = 1.0;
  double path_loss = 1.0;  // amplitude L_k, channel is L_k h_k
  std::variant<QuadraticLocal, LogisticLocal> data;
  Vector local_optimum;
};

enum class TaskFamily { quadratic, logistic };

struct Holdout {
  Matrix features;
  Vector labels;
};

class LearningTask {
 public:
  LearningTask(TaskFamily family, std::vector<DeviceProfile> devices, Vector global_optimum,
               Vector initial_weights, AssumptionConstants constants,
               std::optional<Holdout> holdout = std::nullopt);

  TaskFamily family() const { return family_; }
  std::size_t dimension() const { return static_cast<std::size_t>(optimum_.size()); }
  std::size_t num_devices() const { return devices_.size(); }
  const DeviceProfile& device(std::size_t k) const;
  const std::vector<DeviceProfile>& devices() const { return devices_; }
  const Vector& global_optimum() const { return optimum_; }
  const Vector& initial_weights() const { return initial_; }
  const AssumptionConstants& constants() const { return constants_; }

  std::vector<double> alphas() const;
  std::vector<double> inclusions() const;
  std::vector<double> path_losses() const;

  /// Radio-side attributes do not change the optimization problem, so they
  /// can be reassigned after the task is built.
  void assign_inclusions(const std::vector<double>& r);
  void assign_path_losses(const std::vector<double>& amplitudes);

  Vector local_gradient(std::size_t k, const Vector& w) const;
  double local_loss(std::size_t k, const Vector& w) const;
  double global_loss(const Vector& w) const;
  Vector global_gradient(const Vector& w) const;
  /// F(w) - F(w*), never negative.
  double excess_loss(const Vector& w) const;
  /// Fraction of correctly classified holdout samples (logistic tasks only).
  std::optional<double> holdout_accuracy(const Vector& w) const;

 private:
  TaskFamily family_;
  std::vector<DeviceProfile> devices_;
  Vector optimum_;
  Vector initial_;
  AssumptionConstants constants_;
  std::optional<Holdout> holdout_;
  std::optional<Matrix> global_hessian_;  // quadratic tasks
};

struct QuadraticTaskSpec {
  std::size_t dimension = 1;
  std::size_t devices = 1;
  double heterogeneity = 0.0;  // delta, radius of the local-optimum sphere
  double conditioning = 1.0;   // L / mu
  double init_distance = 1.0;  // |w0 - w*|, with w0 = 0
  std::vector<double> alphas;  // empty means uniform
};

struct LogisticTaskSpec {
  std::size_t dimension = 1;
  std::size_t devices = 1;
  std::size_t samples_per_device = 50;
  std::size_t holdout_samples = 2000;
  double heterogeneity = 0.0;  // spread of per-device feature means
  double regularization = 0.1;
  std::vector<double> alphas;
};

LearningTask make_quadratic_task(const QuadraticTaskSpec& spec, Rng& rng);
LearningTask make_quadratic_task(std::size_t d, std::size_t K, double heterogeneity,
                                 double conditioning, Rng& rng);
LearningTask make_logistic_task(const LogisticTaskSpec& spec, Rng& rng);

/// max |A (u + c)| over |u| <= radius, for symmetric A. Solved exactly through
/// the eigen-decomposition of A and the secular equation of the boundary
/// stationarity condition.
double max_gradient_norm_on_ball(const Matrix& A, const Vector& c, double radius);

}  // namespace wfl
