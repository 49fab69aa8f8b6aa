#pragma once

#include <cmath>
#include <numbers>

namespace coad {

/// Standard normal CDF from the complementary error function; accurate in
/// both tails, unlike 0.5 * (1 + erf(z / sqrt 2)).
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double x, double mean, double stddev) {
  return normal_cdf((x - mean) / stddev);
}

}  // namespace coad
