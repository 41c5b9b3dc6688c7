#pragma once

namespace wfl {

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt for x > 0.
/// Power series below x = 1, modified Lentz continued fraction above.
double exp_integral_e1(double x);

}  // namespace wfl
