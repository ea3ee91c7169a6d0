#include "cfx/levy.hpp"

#include <cmath>

#include "cfx/error.hpp"

namespace cfx {

std::complex<double> levy_exponent_exact(const MarkMeasure& marks, double v) {
  using C = std::complex<double>;
  const C iv(0.0, v);
  if (const auto* pm = std::get_if<PointMass>(&marks)) {
    return pm->weight * (std::exp(iv * pm->size) - 1.0 - iv * pm->size);
  }
  if (const auto* de = std::get_if<DoubleExponential>(&marks)) {
    const double p = de->p_up, a = de->eta_up, b = de->eta_down;
    const double mean = p / a - (1.0 - p) / b;
    return p * a / (a - iv) + (1.0 - p) * b / (b + iv) - 1.0 - iv * mean;
  }
  if (const auto* ts = std::get_if<TemperedStable>(&marks)) {
    const double lam = ts->tempering, al = ts->alpha;
    return ts->c * std::tgamma(-al) *
           (std::pow(C(lam, -v), al) + std::pow(C(lam, v), al) - 2.0 * std::pow(lam, al));
  }
  return 0.0;
}

std::complex<double> levy_cf_exact(const Model& model, const ModelState& state, double T, double u) {
  if (!model.constant_coefficients()) {
    throw Error(Errc::DomainError, "closed-form CF needs constant coefficients");
  }
  if (!(T > 0.0)) throw Error(Errc::DomainError, "T must be positive");
  const double w = u / std::sqrt(T);
  const std::complex<double> jump =
      model.jumps().empty()
          ? 0.0
          : state.intensity_scale * levy_exponent_exact(model.jumps().marks(), w * state.gamma_scale);
  return std::exp(std::complex<double>(-0.5 * w * w * state.sigma * state.sigma * T, w * state.alpha * T) +
                  T * jump);
}

}  // namespace cfx
