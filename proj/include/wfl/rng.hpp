#pragma once

#include <complex>
#include <cstdint>
#include <limits>

namespace wfl {

/// Named substreams. Every random quantity in a trial is drawn from a
/// stream keyed by (master seed, stream, round, device, salt), so results do
/// not depend on the order in which devices or paradigms are processed.
enum class Stream : std::uint64_t {
  task = 1,
  sampler = 2,
  channel = 3,
  quantizer = 4,
  outage = 5,
  noise = 6,
};

/// xoshiro256** seeded through splitmix64. Fixed algorithm and hand-written
/// distributions keep traces bit-identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static Rng substream(std::uint64_t master, Stream stream, std::uint64_t round,
                       std::uint64_t device, std::uint64_t salt = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Circularly-symmetric complex Gaussian with E|z|^2 = mean_power.
  std::complex<double> complex_normal(double mean_power);
  bool bernoulli(double p);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Identifies one round of one trial; hands out per-device substreams.
struct RoundStreams {
  std::uint64_t master = 0;
  std::uint64_t round = 0;
  std::uint64_t salt = 0;

  Rng stream(Stream s, std::uint64_t device) const {
    return Rng::substream(master, s, round, device, salt);
  }
};

}  // namespace wfl
