#include "wfl/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace wfl {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

std::vector<double> resolve_alphas(const std::vector<double>& alphas, std::size_t K) {
  if (alphas.empty()) return std::vector<double>(K, 1.0 / static_cast<double>(K));
  require(alphas.size() == K, "alpha list length must equal the number of devices");
  double total = 0.0;
  for (double a : alphas) {
    require(std::isfinite(a) && a > 0.0, "aggregation weights must be positive");
    total += a;
  }
  require(std::abs(total - 1.0) <= 1e-9, "aggregation weights must sum to 1");
  return alphas;
}

Vector random_unit(std::size_t d, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Matrix random_orthogonal(std::size_t d, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

double log1p_exp_neg(double margin) {
  // log(1 + exp(-margin))
  return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Vector logistic_gradient(const LogisticLocal& data, const Vector& w) {
  const Vector margins = data.labels.cwiseProduct(data.features * w);
  Vector coeff(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    coeff[i] = -data.labels[i] * sigmoid(-margins[i]);
  const auto n = static_cast<double>(data.features.rows());
  return data.features.transpose() * coeff / n + data.regularization * w;
}

Matrix logistic_hessian(const LogisticLocal& data, const Vector& w) {
  const Vector margins = data.labels.cwiseProduct(data.features * w);
  Vector curvature(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double s = sigmoid(margins[i]);
    curvature[i] = s * (1.0 - s);
  }
  const auto n = static_cast<double>(data.features.rows());
  const auto d = data.features.cols();
  Matrix h = data.features.transpose() * curvature.asDiagonal() * data.features / n;
  h += data.regularization * Matrix::Identity(d, d);
  return h;
}

double logistic_loss(const LogisticLocal& data, const Vector& w) {
  const Vector margins = data.labels.cwiseProduct(data.features * w);
  double total = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) total += log1p_exp_neg(margins[i]);
  return total / static_cast<double>(margins.size()) + 0.5 * data.regularization * w.squaredNorm();
}

// Newton's method on a weighted sum of logistic losses.
Vector newton_minimize(const std::vector<const LogisticLocal*>& parts,
                       const std::vector<double>& weights, std::size_t d) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(d));
  for (int iter = 0; iter < 100; ++iter) {
    Vector grad = Vector::Zero(w.size());
    Matrix hess = Matrix::Zero(w.size(), w.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      grad += weights[i] * logistic_gradient(*parts[i], w);
      hess += weights[i] * logistic_hessian(*parts[i], w);
    }
    if (grad.norm() < 1e-14) break;
    w -= hess.ldlt().solve(grad);
  }
  return w;
}

}  // namespace

LearningTask::LearningTask(TaskFamily family, std::vector<DeviceProfile> devices,
                           Vector global_optimum, Vector initial_weights,
                           AssumptionConstants constants, std::optional<Holdout> holdout)
    : family_(family),
      devices_(std::move(devices)),
      optimum_(std::move(global_optimum)),
      initial_(std::move(initial_weights)),
      constants_(constants),
      holdout_(std::move(holdout)) {
  require(!devices_.empty(), "task needs at least one device");
  require(optimum_.size() > 0, "task dimension must be positive");
  require(initial_.size() == optimum_.size(), "initial weights have the wrong length");
  require(constants_.mu > 0.0 && constants_.mu <= constants_.L, "need 0 < mu <= L");
  require(constants_.gamma >= 0.0 && constants_.delta >= 0.0, "gamma and delta must be nonnegative");
  double total = 0.0;
  for (const auto& dev : devices_) {
    require(dev.alpha > 0.0, "aggregation weights must be positive");
    require(dev.inclusion > 0.0 && dev.inclusion <= 1.0, "inclusion probability must lie in (0, 1]");
    require(dev.path_loss > 0.0, "path loss must be positive");
    require(dev.local_optimum.size() == optimum_.size(), "local optimum has the wrong length");
    total += dev.alpha;
  }
  require(std::abs(total - 1.0) <= 1e-9, "aggregation weights must sum to 1");
  if (family_ == TaskFamily::quadratic) {
    Matrix h = Matrix::Zero(optimum_.size(), optimum_.size());
    for (const auto& dev : devices_) h += dev.alpha * std::get<QuadraticLocal>(dev.data).hessian;
    global_hessian_ = std::move(h);
  }
}

const DeviceProfile& LearningTask::device(std::size_t k) const {
  if (k >= devices_.size()) throw std::out_of_range("device index out of range");
  return devices_[k];
}

std::vector<double> LearningTask::alphas() const {
  std::vector<double> out;
  for (const auto& dev : devices_) out.push_back(dev.alpha);
  return out;
}

std::vector<double> LearningTask::inclusions() const {
  std::vector<double> out;
  for (const auto& dev : devices_) out.push_back(dev.inclusion);
  return out;
}

std::vector<double> LearningTask::path_losses() const {
  std::vector<double> out;
  for (const auto& dev : devices_) out.push_back(dev.path_loss);
  return out;
}

void LearningTask::assign_inclusions(const std::vector<double>& r) {
  require(r.size() == devices_.size(), "inclusion list length must equal the number of devices");
  for (double v : r) require(v > 0.0 && v <= 1.0, "inclusion probability must lie in (0, 1]");
  for (std::size_t k = 0; k < r.size(); ++k) devices_[k].inclusion = r[k];
}

void LearningTask::assign_path_losses(const std::vector<double>& amplitudes) {
  require(amplitudes.size() == devices_.size(), "path loss list length must equal the number of devices");
  for (double v : amplitudes) require(std::isfinite(v) && v > 0.0, "path loss must be positive");
  for (std::size_t k = 0; k < amplitudes.size(); ++k) devices_[k].path_loss = amplitudes[k];
}

Vector LearningTask::local_gradient(std::size_t k, const Vector& w) const {
  const auto& dev = device(k);
  require(w.size() == optimum_.size(), "weight vector has the wrong length");
  if (const auto* q = std::get_if<QuadraticLocal>(&dev.data))
    return q->hessian * (w - dev.local_optimum);
  return logistic_gradient(std::get<LogisticLocal>(dev.data), w);
}

double LearningTask::local_loss(std::size_t k, const Vector& w) const {
  const auto& dev = device(k);
  require(w.size() == optimum_.size(), "weight vector has the wrong length");
  if (const auto* q = std::get_if<QuadraticLocal>(&dev.data)) {
    const Vector e = w - dev.local_optimum;
    return 0.5 * e.dot(q->hessian * e);
  }
  return logistic_loss(std::get<LogisticLocal>(dev.data), w);
}

double LearningTask::global_loss(const Vector& w) const {
  double total = 0.0;
  for (std::size_t k = 0; k < devices_.size(); ++k) total += devices_[k].alpha * local_loss(k, w);
  return total;
}

Vector LearningTask::global_gradient(const Vector& w) const {
  Vector g = Vector::Zero(optimum_.size());
  for (std::size_t k = 0; k < devices_.size(); ++k) g += devices_[k].alpha * local_gradient(k, w);
  return g;
}

double LearningTask::excess_loss(const Vector& w) const {
  require(w.size() == optimum_.size(), "weight vector has the wrong length");
  if (!w.allFinite()) throw std::domain_error("non-finite model weights");
  if (global_hessian_) {
    const Vector e = w - optimum_;
    return std::max(0.0, 0.5 * e.dot(*global_hessian_ * e));
  }
  return std::max(0.0, global_loss(w) - global_loss(optimum_));
}

std::optional<double> LearningTask::holdout_accuracy(const Vector& w) const {
  if (!holdout_) return std::nullopt;
  const Vector scores = holdout_->features * w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double predicted = scores[i] >= 0.0 ? 1.0 : -1.0;
    if (predicted == holdout_->labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double max_gradient_norm_on_ball(const Matrix& A, const Vector& c, double radius) {
  require(radius >= 0.0, "radius must be nonnegative");
  if (radius == 0.0) return (A * c).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const Vector s = eig.eigenvalues().array().square();
  const Vector ct = eig.eigenvectors().transpose() * c;
  const double smax = s.maxCoeff();
  const double top_tol = 1e-12 * smax;
  const auto n = s.size();

  double top_weight = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (s[i] >= smax - top_tol) top_weight += ct[i] * ct[i];

  // Hard case: c has no component along the top eigenspace.
  if (top_weight <= 1e-28 * std::max(1.0, c.squaredNorm())) {
    double rest = 0.0;
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (s[i] >= smax - top_tol) continue;
      const double u = s[i] * ct[i] / (smax - s[i]);
      rest += u * u;
      const double shifted = smax * ct[i] / (smax - s[i]);
      value += s[i] * shifted * shifted;
    }
    if (rest <= radius * radius) return std::sqrt(value + smax * (radius * radius - rest));
  }

  auto step_norm2 = [&](double nu) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = s[i] * ct[i] / (nu - s[i]);
      total += u * u;
    }
    return total;
  };
  auto objective = [&](double nu) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double shifted = nu * ct[i] / (nu - s[i]);
      total += s[i] * shifted * shifted;
    }
    return total;
  };

  double lo = smax;
  double hi = smax + smax * c.norm() / radius + smax * 1e-12;
  while (step_norm2(hi) > radius * radius) hi = smax + 2.0 * (hi - smax);
  for (int iter = 0; iter < 200 && hi - lo > 1e-16 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (step_norm2(mid) > radius * radius)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(objective(hi));
}

LearningTask make_quadratic_task(const QuadraticTaskSpec& spec, Rng& rng) {
  require(spec.dimension >= 1 && spec.devices >= 1, "dimension and device count must be >= 1");
  require(std::isfinite(spec.heterogeneity) && spec.heterogeneity >= 0.0,
          "heterogeneity must be finite and nonnegative");
  require(std::isfinite(spec.conditioning), "conditioning must be finite");
  require(spec.conditioning >= 1.0, "conditioning must be >= 1");
  require(std::isfinite(spec.init_distance) && spec.init_distance >= 0.0,
          "initial distance must be finite and nonnegative");
  require(!(spec.dimension == 1 && spec.devices == 1 && spec.conditioning > 1.0),
          "a single one-dimensional device cannot realize conditioning > 1");

  const std::size_t d = spec.dimension;
  const std::size_t K = spec.devices;
  const auto n = static_cast<Eigen::Index>(d);
  const std::vector<double> alphas = resolve_alphas(spec.alphas, K);

  const double L = 1.0;
  const double mu = L / spec.conditioning;

  std::vector<Vector> spectra(K, Vector(n));
  for (auto& lam : spectra)
    for (Eigen::Index i = 0; i < n; ++i) lam[i] = mu + (L - mu) * rng.uniform();
  spectra[0][0] = mu;
  if (d >= 2)
    spectra[0][n - 1] = L;
  else
    spectra[K - 1][0] = L;

  std::vector<Matrix> hessians;
  hessians.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Matrix q = random_orthogonal(d, rng);
    Matrix a = q * spectra[k].asDiagonal() * q.transpose();
    hessians.push_back(0.5 * (a + a.transpose()));
  }

  const Vector w_star = spec.init_distance * random_unit(d, rng);

  // Offsets c_k = w_k* - w* must satisfy sum_k alpha_k A_k c_k = 0 so that w*
  // stays the global minimizer. Alternate between that subspace and the
  // product of unit spheres, then rescale so that max_k |c_k| = delta.
  std::vector<Vector> offsets(K, Vector::Zero(n));
  if (spec.heterogeneity > 0.0 && K >= 2) {
    Matrix gram = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < K; ++k) gram += alphas[k] * alphas[k] * hessians[k] * hessians[k];
    const auto gram_solver = gram.ldlt();
    auto project = [&] {
      Vector residual = Vector::Zero(n);
      for (std::size_t k = 0; k < K; ++k) residual += alphas[k] * (hessians[k] * offsets[k]);
      const Vector correction = gram_solver.solve(residual);
      for (std::size_t k = 0; k < K; ++k) offsets[k] -= alphas[k] * (hessians[k] * correction);
    };
    for (auto& c : offsets) c = random_unit(d, rng);
    for (int iter = 0; iter < 500; ++iter) {
      project();
      for (auto& c : offsets) {
        const double norm = c.norm();
        if (norm > 0.0) c /= norm;
      }
    }
    project();
    double largest = 0.0;
    for (const auto& c : offsets) largest = std::max(largest, c.norm());
    if (largest > 0.0)
      for (auto& c : offsets) c *= spec.heterogeneity / largest;
  }

  AssumptionConstants constants;
  constants.mu = mu;
  constants.L = L;
  for (const auto& c : offsets) constants.delta = std::max(constants.delta, c.norm());

  // Gradients are bounded over the ball |w - w*| <= 2 |w0 - w*|.
  const double radius = 2.0 * spec.init_distance;
  for (std::size_t k = 0; k < K; ++k)
    constants.gamma = std::max(constants.gamma,
                               max_gradient_norm_on_ball(hessians[k], -offsets[k], radius));

  std::vector<DeviceProfile> devices(K);
  for (std::size_t k = 0; k < K; ++k) {
    devices[k].alpha = alphas[k];
    devices[k].data = QuadraticLocal{hessians[k]};
    devices[k].local_optimum = w_star + offsets[k];
  }
  return LearningTask(TaskFamily::quadratic, std::move(devices), w_star, Vector::Zero(n), constants);
}

LearningTask make_quadratic_task(std::size_t d, std::size_t K, double heterogeneity,
                                 double conditioning, Rng& rng) {
  QuadraticTaskSpec spec;
  spec.dimension = d;
  spec.devices = K;
  spec.heterogeneity = heterogeneity;
  spec.conditioning = conditioning;
  return make_quadratic_task(spec, rng);
}

LearningTask make_logistic_task(const LogisticTaskSpec& spec, Rng& rng) {
  require(spec.dimension >= 1 && spec.devices >= 1, "dimension and device count must be >= 1");
  require(spec.samples_per_device >= 1, "need at least one sample per device");
  require(std::isfinite(spec.heterogeneity) && spec.heterogeneity >= 0.0,
          "heterogeneity must be finite and nonnegative");
  require(std::isfinite(spec.regularization) && spec.regularization > 0.0,
          "regularization must be positive");

  const std::size_t d = spec.dimension;
  const std::size_t K = spec.devices;
  const auto n = static_cast<Eigen::Index>(d);
  const std::vector<double> alphas = resolve_alphas(spec.alphas, K);
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Vector truth = 4.0 * random_unit(d, rng);

  std::vector<Vector> means;
  for (std::size_t k = 0; k < K; ++k) means.push_back(spec.heterogeneity * random_unit(d, rng));

  auto draw = [&](const Vector& mean, Matrix& x, Vector& y, Eigen::Index row) {
    for (Eigen::Index j = 0; j < n; ++j) x(row, j) = mean[j] + noise_scale * rng.normal();
    y[row] = rng.bernoulli(sigmoid(x.row(row).dot(truth))) ? 1.0 : -1.0;
  };

  const auto samples = static_cast<Eigen::Index>(spec.samples_per_device);
  std::vector<DeviceProfile> devices(K);
  for (std::size_t k = 0; k < K; ++k) {
    LogisticLocal local;
    local.features = Matrix(samples, n);
    local.labels = Vector(samples);
    local.regularization = spec.regularization;
    for (Eigen::Index i = 0; i < samples; ++i) draw(means[k], local.features, local.labels, i);
    devices[k].alpha = alphas[k];
    devices[k].data = std::move(local);
  }

  Holdout holdout;
  const auto held = static_cast<Eigen::Index>(spec.holdout_samples);
  holdout.features = Matrix(held, n);
  holdout.labels = Vector(held);
  for (Eigen::Index i = 0; i < held; ++i) draw(means[rng.below(K)], holdout.features, holdout.labels, i);

  std::vector<const LogisticLocal*> parts;
  for (const auto& dev : devices) parts.push_back(&std::get<LogisticLocal>(dev.data));
  const Vector w_star = newton_minimize(parts, alphas, d);

  AssumptionConstants constants;
  constants.mu = spec.regularization;
  double max_curvature = 0.0;
  double max_feature_norm = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto* local = parts[k];
    devices[k].local_optimum = newton_minimize({local}, {1.0}, d);
    constants.delta = std::max(constants.delta, (devices[k].local_optimum - w_star).norm());
    const Matrix gram = local->features.transpose() * local->features / static_cast<double>(samples);
    max_curvature = std::max(max_curvature, Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().maxCoeff());
    max_feature_norm = std::max(max_feature_norm, local->features.rowwise().norm().maxCoeff());
  }
  constants.L = spec.regularization + max_curvature / 4.0;
  // |sample gradient| <= |x| + reg |w| and |w| <= |w*| + 2 |w0 - w*| with w0 = 0
  constants.gamma = max_feature_norm + spec.regularization * 3.0 * w_star.norm();

  return LearningTask(TaskFamily::logistic, std::move(devices), w_star, Vector::Zero(n), constants,
                      std::move(holdout));
}

}  // namespace wfl
