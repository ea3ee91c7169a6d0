#pragma once

#include <cmath>
#include <complex>

namespace cfx {

/// e^{ix} - 1 without cancellation for small |x|.
inline std::complex<double> expm1i(double x) {
  const double s = std::sin(0.5 * x);
  return {-2.0 * s * s, std::sin(x)};
}

/// e^{ix} - 1 - ix without cancellation for small |x|.
inline std::complex<double> expm1i_minus_ix(double x) {
  const double s = std::sin(0.5 * x);
  double im;
  if (std::abs(x) < 0.1) {
    const double x2 = x * x;
    // sin x - x, Taylor to x^11
    im = -x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))));
  } else {
    im = std::sin(x) - x;
  }
  return {-2.0 * s * s, im};
}

inline std::complex<double> expi(double x) { return {std::cos(x), std::sin(x)}; }

}  // namespace cfx
