#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wfl/training.hpp"

namespace wfl {

std::vector<std::size_t> sample_participants(std::span<const double> r, std::size_t N, Rng& rng) {
  const std::size_t K = r.size();
  if (K == 0) throw std::invalid_argument("no devices to sample from");
  double total = 0.0;
  for (double v : r) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("inclusion probabilities must lie in (0, 1]");
    total += v;
  }
  if (std::abs(total - static_cast<double>(N)) > 1e-9)
    throw std::invalid_argument("inclusion probabilities must sum to N");

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = K - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  // Points u, u+1, ..., u+N-1 on the cumulative scale; device k owns
  // [C_{k-1}, C_k). Rescaling pins C_K = N so exactly N points land.
  const double u = rng.uniform();
  const double scale = static_cast<double>(N) / total;
  std::vector<char> chosen(K, 0);
  double upper = 0.0;
  std::size_t next_point = 0;
  for (std::size_t pos = 0; pos < K && next_point < N; ++pos) {
    const std::size_t k = order[pos];
    upper = (pos + 1 == K) ? static_cast<double>(N) : upper + r[k] * scale;
    if (next_point < N && u + static_cast<double>(next_point) < upper) {
      chosen[k] = 1;
      ++next_point;
      // r_k <= 1 means at most one point per interval, up to rounding
      while (next_point < N && u + static_cast<double>(next_point) < upper) ++next_point;
    }
  }

  std::vector<std::size_t> out;
  out.reserve(N);
  for (std::size_t k = 0; k < K; ++k)
    if (chosen[k]) out.push_back(k);
  if (out.size() != N) throw std::logic_error("systematic sampling returned the wrong number of devices");
  return out;
}

}  // namespace wfl
