#pragma once

#include <complex>

#include "cfx/model.hpp"

namespace cfx {

/// int (e^{i v z} - 1 - i v z) F(dz) in closed form for every mark family.
std::complex<double> levy_exponent_exact(const MarkMeasure& marks, double v);

/// E[exp(i u_T (x_{t+T} - x_t))] for a constant-coefficient model, from the
/// closed-form exponent. Throws Error(DomainError) when the model's
/// coefficients move.
std::complex<double> levy_cf_exact(const Model& model, const ModelState& state, double T, double u);

}  // namespace cfx
