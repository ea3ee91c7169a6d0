#include "cfx/expansion.hpp"

#include <cmath>

#include "cfx/error.hpp"

namespace cfx {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kLogFloor = 1e-12;
constexpr double kVarianceFloor = 1e-12;

const std::vector<std::string> kCfResidualTags = {"T^(N/2)", "sqrt(delta_n)*T", "delta_n/sqrt(T)"};
const std::vector<std::string> kVarResidualTags = {"T^(N/2)", "sqrt(delta_n*T)", "delta_n/sqrt(T)"};

cplx sum_psi(const Model& m, const ModelState& t, const ModelState& s, const Freq& f,
             const QuadOptions& opt) {
  return psi_terms(m.jumps(), t, s, f, opt).sum();
}

void check_index(const HFGrid& grid, int i) {
  if (i < 1 || i > grid.i_max) {
    throw Error(Errc::GridError, "increment index " + std::to_string(i) + " outside 1.." +
                                     std::to_string(grid.i_max));
  }
}

}  // namespace

HFGrid make_hfgrid(double t, double delta_n, double T, double tau, int i_max) {
  if (!(delta_n > 0.0) || !(T > 0.0) || !std::isfinite(t)) {
    throw Error(Errc::GridError, "grid needs delta_n > 0 and T > 0");
  }
  if (!(tau > 1.0)) throw Error(Errc::GridError, "tau must exceed 1");
  if (i_max < 1) throw Error(Errc::GridError, "i_max must be >= 1");
  if (!(delta_n / T < 1.0)) throw Error(Errc::GridError, "delta_n / T must be < 1");
  return {t, delta_n, T, tau, i_max};
}

cplx theta_factor(const Model& model, const ModelState& state, double T, const Freq& f,
                  const QuadOptions& opt) {
  const double w = f.u_T;
  const cplx ph = phi(model.jumps(), state, state, f, opt).value;
  return std::exp(kI * w * state.alpha * T - 0.5 * w * w * state.sigma * state.sigma * T + T * ph);
}

cplx eta_correction(const Model& model, const ModelState& state, double T, const Freq& f,
                    const QuadOptions& opt) {
  const double w = f.u_T;
  const double s = state.sigma;
  const double T2 = T * T;
  const auto c = chi_all(model.jumps(), state, f, opt);
  return 0.5 * (kI * w * w * w * T2 * s * s * state.sigma_sigma + w * w * s * T2 * c[0].value -
                kI * w * T2 * c[1].value - kI * w * T2 * s * c[2].value - T2 * c[3].value);
}

cplx cf_first_order(const Model& model, const ModelState& state, double T, const Freq& f,
                    const QuadOptions& opt) {
  return theta_factor(model, state, T, f, opt) * (1.0 - eta_correction(model, state, T, f, opt));
}

cplx lambda_expansion(const Model& model, const ModelState& state_t, const ModelState& state_s,
                      double T, const Freq& f, const QuadOptions& opt) {
  const double w = f.u_T;
  const double s = state_t.sigma;
  const cplx ph = phi(model.jumps(), state_t, state_s, f, opt).value;
  const cplx second = -0.5 * kI * w * w * w * s * s * state_t.sigma_sigma * T * T +
                      T * T * sum_psi(model, state_t, state_s, f, opt);
  return std::exp(kI * w * state_t.alpha * T - 0.5 * w * w * s * s * T + T * ph + second);
}

cplx IncrementDecomposition::corrections_sum() const {
  cplx s{0.0, 0.0};
  for (const auto& c : corrections) s += c.value;
  return s;
}

cplx IncrementDecomposition::total() const {
  return theta_prefactor * (corrections_sum() + boundary);
}

IncrementDecomposition increment_cf_expansion(const Model& model, const HFGrid& grid, int i,
                                              const ModelState& prev, const ModelState& cur,
                                              double u, const QuadOptions& opt) {
  check_index(grid, i);
  const double Tp = grid.T_i(i - 1);
  const double Ti = grid.T_i(i);
  const Freq fp = make_freq(u, Tp);
  const Freq fi = make_freq(u, Ti);
  const JumpSystem& js = model.jumps();

  IncrementDecomposition d;
  d.i = i;
  d.u = u;
  d.leading = lambda_expansion(model, prev, cur, Tp, fp, opt) -
              lambda_expansion(model, cur, cur, Ti, fi, opt);
  const cplx theta_p = theta_factor(model, cur, Tp, fp, opt);
  d.theta_prefactor = theta_p;

  const auto chi = chi_all(js, cur, fp, opt);
  const auto xi_prev = xi_all(js, prev, cur, fp, opt);
  const auto xi_cur = xi_all(js, cur, cur, fp, opt);
  std::array<cplx, 8> dxi;
  for (int j = 0; j < 8; ++j) dxi[j] = xi_prev[j].value - xi_cur[j].value;
  const cplx c1 = chi[0].value, c2 = chi[1].value, c3 = chi[2].value, c4 = chi[3].value;

  const double sq = std::sqrt(Tp);
  const double s = cur.sigma;
  const double ss = cur.sigma_sigma;
  const double da = prev.alpha - cur.alpha;
  const double ds = prev.sigma - cur.sigma;
  const double dss = prev.sigma_sigma - cur.sigma_sigma;
  const double u2 = u * u, u3 = u2 * u;
  const cplx k4 = 1.0 + 0.5 * Tp * Tp * c4;

  const cplx line_a = kI * u * sq *
                      (da + k4 * dxi[0] + 0.5 * Tp * c3 * ds + 0.5 * Tp * (dxi[1] + dxi[6] + dxi[7]));
  const cplx line_b = -0.5 * u2 *
                      ((2.0 * s * k4 + Tp * c1) * ds + Tp * Tp * (c2 + s * c3) * dxi[0] +
                       Tp * dxi[2] + Tp * s * (dxi[3] + dxi[5]));
  const cplx line_c = -0.5 * kI * u3 * sq * s *
                      ((2.0 * ss + Tp * c2 + Tp * c3 * s) * ds + s * dss + Tp * c1 * dxi[0] + dxi[4]);
  const cplx line_d = 0.5 * u2 * u2 * Tp * s * s * (c1 * ds + ss * dxi[0]);
  const cplx line_e = 0.5 * kI * u3 * u2 * sq * s * s * s * ss * ds;
  d.corrections = {{"line_iu", line_a},
                   {"line_u2", line_b},
                   {"line_iu3", line_c},
                   {"line_u4", line_d},
                   {"line_iu5", line_e}};

  d.boundary = 1.0 - theta_factor(model, cur, Ti, fi, opt) / theta_p +
               0.25 * kI * u3 * s * s * ss * grid.delta_n / sq;
  return d;
}

std::pair<double, double> bias_terms_phi_psi(const Model& model, const HFGrid& grid, int i,
                                             const ModelState& prev, const ModelState& cur,
                                             double u, const QuadOptions& opt) {
  check_index(grid, i);
  const JumpSystem& js = model.jumps();
  if (js.empty()) return {0.0, 0.0};
  const double Tp = grid.T_i(i - 1);
  const double Ti = grid.T_i(i);
  const Freq fp = make_freq(u, Tp);
  const Freq fi = make_freq(u, Ti);
  const double wp2 = fp.u_T * fp.u_T;
  const double wi2 = fi.u_T * fi.u_T;

  const double phi_prev = -2.0 / wp2 * phi(js, prev, cur, fp, opt).value.real();
  const double phi_cur = -2.0 / wi2 * phi(js, cur, cur, fi, opt).value.real();
  const double psi_prev = -2.0 * Tp / wp2 * sum_psi(model, prev, cur, fp, opt).real();
  const double psi_cur = -2.0 * Ti / wi2 * sum_psi(model, cur, cur, fi, opt).real();
  return {phi_prev - phi_cur, psi_prev - psi_cur};
}

std::string_view to_string(TermStatus s) {
  switch (s) {
    case TermStatus::modeled: return "modeled";
    case TermStatus::residual: return "residual";
    case TermStatus::cancelled: return "cancelled";
    case TermStatus::diagnostic: return "diagnostic";
  }
  return "modeled";
}

const ReportTerm* ExpansionReport::find(const std::string& name) const {
  for (const auto& t : terms) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

cplx ExpansionReport::modeled_total() const {
  cplx s{0.0, 0.0};
  for (const auto& t : terms) {
    if (t.status == TermStatus::modeled && t.value) s += *t.value;
  }
  return s;
}

ExpansionReport to_report(const IncrementDecomposition& d, const HFGrid& grid) {
  ExpansionReport r;
  r.kind = "cf_increment";
  r.i = d.i;
  r.u = d.u;
  r.T = grid.T;
  r.delta_n = grid.delta_n;
  r.tau = grid.tau;
  r.terms.push_back({"leading_delta_lambda", d.leading, TermStatus::modeled, {}});
  r.terms.push_back({"dvCT_bucket", std::nullopt, TermStatus::residual, {"sqrt(delta_n)"}});
  r.terms.push_back({"residual", std::nullopt, TermStatus::residual, kCfResidualTags});
  r.terms.push_back({"theta_prefactor", d.theta_prefactor, TermStatus::diagnostic, {}});
  for (const auto& c : d.corrections) {
    r.terms.push_back({c.name, c.value, TermStatus::diagnostic, {}});
  }
  r.terms.push_back({"boundary", d.boundary, TermStatus::diagnostic, {}});
  r.terms.push_back({"prefactor_times_lines", d.total(), TermStatus::diagnostic, {}});
  return r;
}

ExpansionReport increment_variance_expansion(const Model& model, const HFGrid& grid, int i,
                                             const ModelState& prev, const ModelState& cur,
                                             double u, const QuadOptions& opt) {
  check_index(grid, i);
  ExpansionReport r;
  r.kind = "variance_increment";
  r.i = i;
  r.u = u;
  r.T = grid.T;
  r.delta_n = grid.delta_n;
  r.tau = grid.tau;

  const double spot = prev.sigma * prev.sigma - cur.sigma * cur.sigma;
  r.terms.push_back({"spot_variance_increment", cplx(spot), TermStatus::modeled, {}});
  if (!model.jumps().empty()) {
    const auto [dphi, dpsi] = bias_terms_phi_psi(model, grid, i, prev, cur, u, opt);
    r.terms.push_back({"phi_term", cplx(dphi), TermStatus::modeled, {}});
    r.terms.push_back({"psi_term", cplx(dpsi), TermStatus::modeled, {}});
  } else {
    r.terms.push_back({"phi_term", cplx(0.0), TermStatus::modeled, {}});
    r.terms.push_back({"psi_term", cplx(0.0), TermStatus::modeled, {}});
  }
  r.terms.push_back({"dvCT_bucket", std::nullopt, TermStatus::residual, {"sqrt(delta_n)*T"}});
  r.terms.push_back({"residual", std::nullopt, TermStatus::residual, kVarResidualTags});

  // -(2/u^2) Delta log|Lambda| equals the modeled sum; kept as a check.
  const double Tp = grid.T_i(i - 1);
  const double Ti = grid.T_i(i);
  const cplx lp = lambda_expansion(model, prev, cur, Tp, make_freq(u, Tp), opt);
  const cplx li = lambda_expansion(model, cur, cur, Ti, make_freq(u, Ti), opt);
  if (std::abs(lp) < kLogFloor || std::abs(li) < kLogFloor) {
    throw Error(Errc::DegenerateCF, "|Lambda| below 1e-12");
  }
  const double implied = -2.0 / (u * u) * (std::log(std::abs(lp)) - std::log(std::abs(li)));
  r.terms.push_back({"lambda_implied_increment", cplx(implied), TermStatus::diagnostic, {}});
  return r;
}

double gamma_sigma_increment_integral(const Model& model, const ModelState& prev,
                                      const ModelState& cur, const QuadOptions& opt) {
  const JumpSystem& js = model.jumps();
  const double dh = prev.gamma_sigma_scale - cur.gamma_sigma_scale;
  const AffineMark shape = js.spec().gamma_sigma_shape;
  if (js.empty() || dh == 0.0 || shape.is_zero()) return 0.0;
  const double lam = cur.intensity_scale;
  const QuadResult q = integrate([&](double z) { return cplx(dh * shape(z) * lam, 0.0); },
                                 js.marks(), opt);
  return q.value.real();
}

ExpansionReport increment_transform_expansion(const Model& model, const HFGrid& grid, int i,
                                              const ModelState& prev, const ModelState& cur,
                                              double u, TransformKind kind, bool debias,
                                              const QuadOptions& opt) {
  check_index(grid, i);
  const double v_prev = prev.sigma * prev.sigma;
  const double v_cur = cur.sigma * cur.sigma;
  if (kind != TransformKind::x && (v_prev <= kVarianceFloor || v_cur <= kVarianceFloor)) {
    throw Error(Errc::DegenerateVariance, "sigma^2 must stay above 1e-12 on the window");
  }
  ExpansionReport r;
  r.kind = "transform_increment";
  r.i = i;
  r.u = u;
  r.T = grid.T;
  r.delta_n = grid.delta_n;
  r.tau = grid.tau;
  r.transform = kind;
  r.debiased = debias;

  const double fp = transform_derivative(kind, v_cur);
  const double spot = transform_value(kind, v_prev) - transform_value(kind, v_cur);
  const double g = gamma_sigma_increment_integral(model, prev, cur, opt);
  // Terms that scale with the previous tenor: coefficient * X_{i-1}.
  const double gamma_sigma_coef = -fp * cur.sigma * g;
  const double Tp = grid.T_i(i - 1);
  const double Tpp = grid.Tprime_i(i - 1);

  if (!debias) {
    r.terms.push_back({"spot_transform_increment", cplx(spot), TermStatus::modeled, {}});
    r.terms.push_back({"gamma_sigma_term", cplx(gamma_sigma_coef * Tp), TermStatus::modeled, {}});
    r.terms.push_back({"dvCT_bucket", std::nullopt, TermStatus::residual, {"sqrt(delta_n)*T"}});
  } else {
    // (T'_{i-1} X_T - T_{i-1} X_T') / (T' - T) applied term by term.
    const double span = grid.Tprime() - grid.T;
    const double a = Tpp / span;
    const double b = Tp / span;
    r.terms.push_back({"spot_transform_increment", cplx(a * spot - b * spot), TermStatus::modeled, {}});
    r.terms.push_back({"gamma_sigma_term",
                       cplx(a * (gamma_sigma_coef * Tp) - b * (gamma_sigma_coef * Tpp)),
                       TermStatus::cancelled, {}});
    // The bucket's unknown factor is multiplied by a T_{i-1} - b T'_{i-1}.
    r.terms.push_back({"dvCT_bucket", cplx(fp * (a * Tp - b * Tpp)), TermStatus::cancelled,
                       {"sqrt(delta_n)*T"}});
  }
  r.terms.push_back({"residual", std::nullopt, TermStatus::residual, kVarResidualTags});

  if (!model.jumps().empty()) {
    const auto [dphi, dpsi] = bias_terms_phi_psi(model, grid, i, prev, cur, u, opt);
    r.terms.push_back({"phi_term", cplx(fp * dphi), TermStatus::diagnostic, {}});
    r.terms.push_back({"psi_term", cplx(fp * dpsi), TermStatus::diagnostic, {}});
  }
  return r;
}

}  // namespace cfx
