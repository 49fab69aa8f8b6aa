#pragma once

#include <cmath>
#include <concepts>

namespace coad {

/// Golden-section search for the minimizer of a unimodal `f` on [lo, hi].
///
/// Shrinks the bracket by 1/phi per iteration, reusing one interior
/// evaluation each time, until its width drops below `tolerance`. Returns
/// the midpoint of the final bracket.
template <std::invocable<double> F>
double golden_section_minimize(F&& f, double lo, double hi, double tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace coad
