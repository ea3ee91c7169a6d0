#include "cfx/jumpcalc.hpp"

#include <cmath>
#include <optional>

#include "cfx/cmath_ext.hpp"
#include "cfx/error.hpp"

namespace cfx {

Freq make_freq(double u, double T) {
  if (!std::isfinite(u) || !std::isfinite(T) || !(T > 0.0) || u == 0.0) {
    throw Error(Errc::DomainError, "frequency needs u != 0 and T > 0");
  }
  return {u, T, u / std::sqrt(T)};
}

std::string_view to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::phi: return "phi";
    case FunctionalKind::psi: return "psi";
    case FunctionalKind::psi_bar: return "psi_bar";
    case FunctionalKind::psi_tilde: return "psi_tilde";
    case FunctionalKind::chi1: return "chi1";
    case FunctionalKind::chi2: return "chi2";
    case FunctionalKind::chi3: return "chi3";
    case FunctionalKind::chi4: return "chi4";
    case FunctionalKind::xi1: return "xi1";
    case FunctionalKind::xi2: return "xi2";
    case FunctionalKind::xi3: return "xi3";
    case FunctionalKind::xi4: return "xi4";
    case FunctionalKind::xi5: return "xi5";
    case FunctionalKind::xi6: return "xi6";
    case FunctionalKind::xi7: return "xi7";
    case FunctionalKind::xi8: return "xi8";
  }
  return "unknown";
}

namespace {

// A value with an absolute error bound, closed under the products used below.
struct Val {
  cplx v{0.0, 0.0};
  double e = 0.0;
  bool ok = true;
};

Val operator*(const Val& a, const Val& b) {
  return {a.v * b.v, std::abs(a.v) * b.e + std::abs(b.v) * a.e + a.e * b.e, a.ok && b.ok};
}
Val operator*(cplx c, const Val& a) { return {c * a.v, std::abs(c) * a.e, a.ok}; }
Val operator*(double c, const Val& a) { return {c * a.v, std::abs(c) * a.e, a.ok}; }
Val operator+(const Val& a, const Val& b) { return {a.v + b.v, a.e + b.e, a.ok && b.ok}; }

JumpFunctionalValue out(FunctionalKind k, const Val& x) { return {k, x.v, x.e, !x.ok}; }

// One-dimensional mark integrals with the exponent e(z) = e^{i w g z}.
// Every separable double integral of the model zoo factors into these.
class MarkIntegrals {
 public:
  MarkIntegrals(const JumpSystem& js, double g, double w, const QuadOptions& opt)
      : js_(js), g_(g), w_(w), opt_(opt) {}

  // int (e - 1 - i w g z) F(dz)
  Val comp() {
    if (!comp_) comp_ = run([this](double z) { return expm1i_minus_ix(w_ * g_ * z); });
    return *comp_;
  }
  // int (e - 1) z F(dz)
  Val lin() {
    if (!lin_) lin_ = run([this](double z) { return expm1i(w_ * g_ * z) * z; });
    return *lin_;
  }
  // int e z^2 F(dz)
  Val e_z2() {
    if (!ez2_) ez2_ = run([this](double z) { return expi(w_ * g_ * z) * (z * z); });
    return *ez2_;
  }
  // int (e - 1) excite(z) F(dz)
  Val excite() {
    const RadialMark& ex = js_.spec().intensity_excitation;
    if (ex.is_zero()) return {};
    if (!excite_) excite_ = run([this, ex](double z) { return expm1i(w_ * g_ * z) * ex(z); });
    return *excite_;
  }
  // int e z excite(z) F(dz)
  Val e_z_excite() {
    const RadialMark& ex = js_.spec().intensity_excitation;
    if (ex.is_zero()) return {};
    return run([this, ex](double z) { return expi(w_ * g_ * z) * (z * ex(z)); });
  }
  // int (e - 1) (sigma^gamma(z) + h shape(z)) F(dz)
  Val sigma_jump(double h) {
    const double gv = js_.spec().gamma_vol;
    const AffineMark sh = js_.spec().gamma_sigma_shape;
    if (gv == 0.0 && (h == 0.0 || sh.is_zero())) return {};
    return run([this, gv, h, sh](double z) { return expm1i(w_ * g_ * z) * (gv * z + h * sh(z)); });
  }
  // int e z (sigma^gamma(z) + h shape(z)) F(dz)
  Val e_z_sigma_jump(double h) {
    const double gv = js_.spec().gamma_vol;
    const AffineMark sh = js_.spec().gamma_sigma_shape;
    if (gv == 0.0 && (h == 0.0 || sh.is_zero())) return {};
    return run([this, gv, h, sh](double z) { return expi(w_ * g_ * z) * (z * (gv * z + h * sh(z))); });
  }

 private:
  template <class F>
  Val run(F fn) {
    if (js_.empty()) return {};
    const QuadResult r = integrate(Integrand(fn), js_.marks(), opt_);
    return {r.value, r.error, r.converged};
  }

  const JumpSystem& js_;
  double g_;
  double w_;
  QuadOptions opt_;
  std::optional<Val> comp_, lin_, ez2_, excite_;
};

struct ChiBlock {
  Val c1, c2, c3, c4;
};

// chi^(1..4) with carrier state_t and measure nu_s. With s = t these are the
// chi functionals; for s != t they are the building blocks of psi, psi_bar,
// psi_tilde, which are linear in them.
ChiBlock chi_block(const JumpSystem& js, const ModelState& state_t, const ModelState& state_s,
                   const Freq& f, const QuadOptions& opt) {
  ChiBlock b;
  if (js.empty()) return b;
  const auto& spec = js.spec();
  MarkIntegrals m(js, state_t.gamma_scale, f.u_T, opt);
  const double ls = state_s.intensity_scale;
  b.c1 = ls * m.sigma_jump(state_t.gamma_sigma_scale);
  if (spec.gamma_jump != 0.0) {
    const Val l = m.lin();
    b.c2 = (spec.gamma_jump * ls * ls) * (l * l);
  }
  if (spec.intensity_vol != 0.0) b.c3 = spec.intensity_vol * m.comp();
  if (!spec.intensity_excitation.is_zero()) b.c4 = ls * (m.comp() * m.excite());
  return b;
}

}  // namespace

JumpFunctionalValue phi(const JumpSystem& js, const ModelState& state_t, const ModelState& state_s,
                        const Freq& f, const QuadOptions& opt) {
  if (js.empty()) return {FunctionalKind::phi};
  MarkIntegrals m(js, state_t.gamma_scale, f.u_T, opt);
  return out(FunctionalKind::phi, state_s.intensity_scale * m.comp());
}

std::array<JumpFunctionalValue, 4> chi_all(const JumpSystem& js, const ModelState& state,
                                           const Freq& f, const QuadOptions& opt) {
  const ChiBlock b = chi_block(js, state, state, f, opt);
  return {out(FunctionalKind::chi1, b.c1), out(FunctionalKind::chi2, b.c2),
          out(FunctionalKind::chi3, b.c3), out(FunctionalKind::chi4, b.c4)};
}

JumpFunctionalValue chi(int k, const JumpSystem& js, const ModelState& state, const Freq& f,
                        const QuadOptions& opt) {
  if (k < 1 || k > 4) throw Error(Errc::DomainError, "chi index must be 1..4");
  return chi_all(js, state, f, opt)[k - 1];
}

PsiTerms psi_terms(const JumpSystem& js, const ModelState& state_t, const ModelState& state_s,
                   const Freq& f, const QuadOptions& opt) {
  const ChiBlock b = chi_block(js, state_t, state_s, f, opt);
  const double w = f.u_T;
  const double sig = state_t.sigma;
  const cplx iw(0.0, w);
  PsiTerms p;
  p.psi = out(FunctionalKind::psi, (-0.5 * w * w * sig) * b.c1);
  p.psi_bar = out(FunctionalKind::psi_bar, (0.5 * iw) * b.c2);
  p.psi_tilde = out(FunctionalKind::psi_tilde, (0.5 * iw * sig) * b.c3 + 0.5 * b.c4);
  return p;
}

std::array<JumpFunctionalValue, 8> xi_all(const JumpSystem& js, const ModelState& state_t,
                                          const ModelState& state_s, const Freq& f,
                                          const QuadOptions& opt) {
  std::array<Val, 8> x{};
  if (!js.empty()) {
    const auto& spec = js.spec();
    // Exponents are frozen at s; gamma(t,.), sigma^gamma and gamma^sigma(t,.) carry t.
    MarkIntegrals m(js, state_s.gamma_scale, f.u_T, opt);
    const double ls = state_s.intensity_scale;
    const double gt = state_t.gamma_scale;
    const double gj = spec.gamma_jump;
    const bool excites = !spec.intensity_excitation.is_zero();

    if (gt != 0.0) x[0] = (ls * gt) * m.lin();
    if (gj != 0.0) {
      const Val l = m.lin();
      x[1] = (gj * ls * ls) * (l * l);
      if (gt != 0.0) x[2] = (2.0 * gj * ls * ls * gt) * (l * m.e_z2());
    }
    x[3] = ls * m.sigma_jump(state_t.gamma_sigma_scale);
    if (gt != 0.0) {
      x[4] = (ls * gt) * m.e_z_sigma_jump(state_s.gamma_sigma_scale);
      if (spec.intensity_vol != 0.0) x[5] = (spec.intensity_vol * gt) * m.lin();
      if (excites) {
        x[6] = (gt * ls) * (m.lin() * m.excite());
        x[7] = (gt * ls) * (m.comp() * m.e_z_excite());
      }
    }
  }
  std::array<JumpFunctionalValue, 8> r;
  for (int j = 0; j < 8; ++j) {
    r[j] = out(static_cast<FunctionalKind>(static_cast<int>(FunctionalKind::xi1) + j), x[j]);
  }
  return r;
}

JumpFunctionalValue xi(int j, const JumpSystem& js, const ModelState& state_t,
                       const ModelState& state_s, const Freq& f, const QuadOptions& opt) {
  if (j < 1 || j > 8) throw Error(Errc::DomainError, "xi index must be 1..8");
  return xi_all(js, state_t, state_s, f, opt)[j - 1];
}

}  // namespace cfx
