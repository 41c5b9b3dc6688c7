#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "wfl/rng.hpp"

using wfl::Rng;
using wfl::Stream;

TEST_CASE("rng: same seed gives the same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a() == b());
}

TEST_CASE("rng: substreams differ by every key component") {
  std::set<std::uint64_t> firsts;
  firsts.insert(Rng::substream(1, Stream::channel, 0, 0)());
  firsts.insert(Rng::substream(2, Stream::channel, 0, 0)());
  firsts.insert(Rng::substream(1, Stream::noise, 0, 0)());
  firsts.insert(Rng::substream(1, Stream::channel, 1, 0)());
  firsts.insert(Rng::substream(1, Stream::channel, 0, 1)());
  firsts.insert(Rng::substream(1, Stream::channel, 0, 0, 1)());
  CHECK(firsts.size() == 6);
}

TEST_CASE("rng: uniform, normal and complex normal moments") {
  Rng rng(7);
  testing::Moments u, z, c;
  for (int i = 0; i < 200000; ++i) {
    const double x = rng.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    u.add(x);
    z.add(rng.normal());
    c.add(std::norm(rng.complex_normal(2.0)));
  }
  CHECK(std::abs(u.mean - 0.5) < 4 * u.stderr_mean());
  CHECK(std::abs(z.mean) < 4 * z.stderr_mean());
  CHECK(std::abs(z.variance() - 1.0) < 0.02);
  CHECK(std::abs(c.mean - 2.0) < 4 * c.stderr_mean());
}

TEST_CASE("rng: below stays in range and covers it") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(testing::within_binomial(static_cast<std::size_t>(c), 70000, 1.0 / 7.0, 4.0));
  CHECK(rng.bernoulli(1.0));
  CHECK_FALSE(rng.bernoulli(0.0));
}

TEST_CASE("rng: independent substreams are uncorrelated") {
  Rng a = Rng::substream(5, Stream::quantizer, 0, 0, 1);
  Rng b = Rng::substream(5, Stream::noise, 0, 0, 2);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += a.normal() * b.normal();
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
}
