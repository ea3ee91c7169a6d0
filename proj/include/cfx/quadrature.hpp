#pragma once

#include <complex>
#include <functional>

#include "cfx/model.hpp"

namespace cfx {

using cplx = std::complex<double>;
using Integrand = std::function<cplx(double)>;

struct QuadOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-15;
  int max_depth = 20;          // bisection levels per interval
  double tail_cutoff = 1e-14;  // density level below which tails are truncated
  bool throw_on_fail = true;
};

struct QuadResult {
  cplx value{0.0, 0.0};
  double error = 0.0;
  bool converged = true;

  QuadResult& operator+=(const QuadResult& o) {
    value += o.value;
    error += o.error;
    converged = converged && o.converged;
    return *this;
  }
};

/// Adaptive Gauss-Kronrod 7/15 on [a, b] with recursive bisection.
QuadResult integrate_interval(const Integrand& f, double a, double b, const QuadOptions& opt = {});

/// int f(z) F(dz). Point masses are evaluated exactly (error 0). Throws
/// Error(QuadratureFail) when the error estimate stays above tolerance after
/// maximal refinement, or when an infinite-activity integral diverges at 0.
QuadResult integrate(const Integrand& f, const MarkMeasure& measure, const QuadOptions& opt = {});

}  // namespace cfx
