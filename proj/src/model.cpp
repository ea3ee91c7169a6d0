#include "cfx/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cfx/error.hpp"
#include "cfx/quadrature.hpp"

namespace cfx {

bool is_empty(const MarkMeasure& m) {
  if (std::holds_alternative<std::monostate>(m)) return true;
  if (const auto* pm = std::get_if<PointMass>(&m)) return pm->weight == 0.0;
  return false;
}

bool is_finite_activity(const MarkMeasure& m) { return !std::holds_alternative<TemperedStable>(m); }

double total_mass(const MarkMeasure& m) {
  return std::visit(
      [](const auto& v) -> double {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, std::monostate>) {
          return 0.0;
        } else if constexpr (std::is_same_v<M, PointMass>) {
          return v.weight;
        } else if constexpr (std::is_same_v<M, DoubleExponential>) {
          return 1.0;
        } else {
          return std::numeric_limits<double>::infinity();
        }
      },
      m);
}

const IntegralCheck* ValidityReport::find(const std::string& name) const {
  for (const auto& c : integrals) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ModelState Model::initial_state() const {
  ModelState s;
  s.time = 0.0;
  s.x = spec_.x0;
  s.sigma = spec_.vol_sigma0;
  s.alpha = spec_.drift_alpha;
  s.sigma_sigma = spec_.vol_of_vol_ss;
  s.sigma_perp = spec_.vol_of_vol_perp;
  s.gamma_scale = spec_.jumps.gamma_scale0;
  s.gamma_sigma_scale = spec_.jumps.gamma_sigma_scale0;
  s.intensity_scale = spec_.jumps.intensity0;
  return s;
}

bool Model::constant_coefficients() const {
  const auto& l = spec_.second_layer;
  const auto& j = spec_.jumps;
  const bool second_layer_still = sigma_drift(spec_.vol_sigma0) == 0.0 && l.ss_drift == 0.0 &&
                                  l.ss_vol == 0.0 && l.perp_drift == 0.0 && l.perp_vol == 0.0 &&
                                  spec_.vol_of_vol_ss == 0.0 && spec_.vol_of_vol_perp == 0.0;
  if (!second_layer_still) return false;
  if (jumps_.empty()) return true;
  return j.gamma_drift == 0.0 && j.gamma_vol == 0.0 && j.gamma_jump == 0.0 &&
         j.gamma_sigma_shape.is_zero() && j.intensity_vol == 0.0 &&
         j.intensity_kappa * (j.intensity_theta - j.intensity0) == 0.0 &&
         j.intensity_excitation.is_zero();
}

bool Model::uses_second_brownian() const {
  const auto& l = spec_.second_layer;
  return spec_.vol_of_vol_perp != 0.0 || l.perp_drift != 0.0 || l.perp_vol != 0.0;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidSpec, what);
}

bool finite(double v) { return std::isfinite(v); }

void validate_marks(const MarkMeasure& m) {
  std::visit(
      [](const auto& v) {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, PointMass>) {
          require(finite(v.size) && finite(v.weight) && v.weight >= 0.0,
                  "point mass needs finite size and weight >= 0");
        } else if constexpr (std::is_same_v<M, DoubleExponential>) {
          require(v.eta_up > 0.0 && v.eta_down > 0.0 && finite(v.eta_up) && finite(v.eta_down),
                  "double exponential rates must be positive");
          require(v.p_up >= 0.0 && v.p_up <= 1.0, "double exponential p_up must lie in [0,1]");
        } else if constexpr (std::is_same_v<M, TemperedStable>) {
          require(v.alpha > 1.0 && v.alpha < 2.0, "tempered stable alpha must lie in (1,2)");
          require(v.c > 0.0 && finite(v.c), "tempered stable c must be positive");
          require(v.tempering > 0.0 && finite(v.tempering), "tempering must be positive");
        }
      },
      m);
}

IntegralCheck check_integral(std::string name, const Integrand& f, const MarkMeasure& marks,
                             double scale) {
  IntegralCheck c{std::move(name), 0.0, true};
  QuadOptions opt;
  opt.rel_tol = 1e-7;
  try {
    c.value = scale * integrate(f, marks, opt).value.real();
  } catch (const Error& e) {
    if (e.code() != Errc::QuadratureFail) throw;
    c.value = std::numeric_limits<double>::infinity();
    c.finite = false;
  }
  if (!std::isfinite(c.value)) c.finite = false;
  return c;
}

}  // namespace

ValidityReport assumption_report(const Model& model) {
  const ModelSpec& spec = model.spec();
  const JumpSystem& js = model.jumps();
  const ModelState s = model.initial_state();
  const double r = spec.activity_exponent_r;
  const double lam = s.intensity_scale;

  ValidityReport rep;
  rep.intensity_nonnegative = spec.jumps.intensity0 >= 0.0 && spec.jumps.intensity_theta >= 0.0;
  rep.special_semimartingale = true;
  rep.not_checked = {
      "time regularity of sigma^lambda and gamma^lambda",
      "smooth approximation of lambda over [t, t']",
      "time regularity of gamma",
  };
  if (js.empty()) {
    for (const char* name : {"int|gamma|^r nu", "int|gamma|^2 nu", "int|gamma| nu",
                             "int|gamma_sigma|^2 nu", "int|gamma_sigma| nu",
                             "int|gamma_lambda| lambda F", "int|gamma_gamma|^2 nu nu"}) {
      rep.integrals.push_back({name, 0.0, true});
    }
    return rep;
  }

  const MarkMeasure& F = js.marks();
  const auto real_fn = [](auto fn) { return Integrand([fn](double z) { return cplx(fn(z), 0.0); }); };

  rep.integrals.push_back(check_integral(
      "int|gamma|^r nu", real_fn([&](double z) { return std::pow(std::abs(js.gamma(s, z)), r); }), F,
      lam));
  rep.integrals.push_back(check_integral(
      "int|gamma|^2 nu", real_fn([&](double z) { return std::pow(js.gamma(s, z), 2); }), F, lam));
  rep.integrals.push_back(check_integral(
      "int|gamma| nu", real_fn([&](double z) { return std::abs(js.gamma(s, z)); }), F, lam));
  rep.integrals.push_back(check_integral(
      "int|gamma_sigma|^2 nu", real_fn([&](double z) { return std::pow(js.gamma_sigma(s, z), 2); }),
      F, lam));
  rep.integrals.push_back(check_integral(
      "int|gamma_sigma| nu", real_fn([&](double z) { return std::abs(js.gamma_sigma(s, z)); }), F,
      lam));
  rep.integrals.push_back(check_integral(
      "int|gamma_lambda| lambda F", real_fn([&](double z) { return std::abs(js.gamma_lambda(0.0, z)); }),
      F, lam));
  // gamma^gamma is separable, so its L2(nu x nu) norm is a product.
  const IntegralCheck z2 =
      check_integral("z2", real_fn([](double z) { return z * z; }), F, lam);
  const double gg = js.gamma_gamma_coef();
  IntegralCheck ggc{"int|gamma_gamma|^2 nu nu", gg == 0.0 ? 0.0 : gg * gg * z2.value * z2.value,
                    gg == 0.0 || z2.finite};
  rep.integrals.push_back(ggc);

  for (const auto& c : rep.integrals) {
    const bool summability = c.name == "int|gamma| nu" || c.name == "int|gamma_sigma| nu";
    if (summability) {
      rep.assumption2_summable = rep.assumption2_summable && c.finite;
    } else {
      rep.assumption1_integrability = rep.assumption1_integrability && c.finite;
    }
  }
  return rep;
}

Model build_model(const ModelSpec& spec) {
  require(finite(spec.x0) && finite(spec.drift_alpha) && finite(spec.vol_sigma0) &&
              finite(spec.vol_of_vol_ss) && finite(spec.vol_of_vol_perp),
          "first-layer coefficients must be finite");
  const auto& l = spec.second_layer;
  require(finite(l.sigma_drift) && finite(l.sigma_kappa) && finite(l.sigma_theta) &&
              finite(l.ss_drift) && finite(l.ss_vol) && finite(l.perp_drift) && finite(l.perp_vol),
          "second-layer coefficients must be finite");
  require(spec.vol_sigma0 >= 0.0, "vol_sigma0 must be >= 0");
  require(spec.activity_exponent_r >= 1.0 && spec.activity_exponent_r < 2.0,
          "activity exponent r must lie in [1,2)");
  require(spec.hidden_layers >= 3, "at least three hidden layers are required");
  const auto& j = spec.jumps;
  require(finite(j.gamma_scale0) && finite(j.gamma_drift) && finite(j.gamma_vol) &&
              finite(j.gamma_jump) && finite(j.gamma_sigma_scale0) && finite(j.gamma_sigma_drift) &&
              finite(j.gamma_sigma_vol) && finite(j.intensity0) && finite(j.intensity_kappa) &&
              finite(j.intensity_theta) && finite(j.intensity_vol),
          "jump coefficients must be finite");
  require(j.intensity0 >= 0.0 && j.intensity_theta >= 0.0, "intensity must be nonnegative");
  validate_marks(j.marks);

  Model m;
  m.spec_ = spec;
  m.jumps_ = JumpSystem(spec.jumps);
  m.validity_ = assumption_report(m);
  if (!m.validity_.assumption1_integrability) {
    std::ostringstream os;
    os << "divergent jump integral:";
    for (const auto& c : m.validity_.integrals) {
      if (!c.finite && c.name != "int|gamma| nu" && c.name != "int|gamma_sigma| nu") {
        os << ' ' << c.name;
      }
    }
    throw Error(Errc::InvalidSpec, os.str());
  }
  return m;
}

ModelSpec black_scholes_spec(double sigma, double alpha) {
  ModelSpec s;
  s.vol_sigma0 = sigma;
  s.drift_alpha = alpha;
  return s;
}

}  // namespace cfx
