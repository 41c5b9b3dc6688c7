#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>

namespace testing {

/// E1(x) = e^{-x} int_0^inf e^{-x u} / (1 + u) du, by exp-sinh quadrature in
/// extended precision. `error` receives the quadrature's relative error estimate.
inline long double e1_quadrature(long double x, long double* error = nullptr) {
  boost::math::quadrature::exp_sinh<long double> integrator(12);
  long double estimate = 0, l1 = 0;
  const auto f = [x](long double u) { return std::exp(-x * u) / (1 + u); };
  const long double value = integrator.integrate(f, 1e-18L, &estimate, &l1);
  if (error) *error = estimate / value;
  return std::exp(-x) * value;
}

}  // namespace testing
