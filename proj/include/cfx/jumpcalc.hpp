#pragma once

#include <array>
#include <complex>
#include <string_view>

#include "cfx/model.hpp"
#include "cfx/quadrature.hpp"

namespace cfx {

/// Frequency u together with its tenor-normalized version u_T = u / sqrt(T).
struct Freq {
  double u = 1.0;
  double T = 1.0;
  double u_T = 1.0;
};

/// Throws Error(DomainError) unless u != 0 and T > 0 are finite.
Freq make_freq(double u, double T);

enum class FunctionalKind {
  phi, psi, psi_bar, psi_tilde,
  chi1, chi2, chi3, chi4,
  xi1, xi2, xi3, xi4, xi5, xi6, xi7, xi8,
};

std::string_view to_string(FunctionalKind kind);

struct JumpFunctionalValue {
  FunctionalKind kind = FunctionalKind::phi;
  cplx value{0.0, 0.0};
  double quadrature_error = 0.0;
  bool degraded = false;  // only set when QuadOptions::throw_on_fail is false
};

// In the two-state functionals, state_t carries the increment (gamma, sigma,
// gamma^sigma at t) and state_s supplies the frozen quantities (nu_s and the
// intensity coefficients at s). All functionals are evaluated at w = f.u_T.

/// phi_t(s, w) = int (e^{iw gamma(t,z)} - 1 - iw gamma(t,z)) nu_s(dz).
JumpFunctionalValue phi(const JumpSystem& js, const ModelState& state_t, const ModelState& state_s,
                        const Freq& f, const QuadOptions& opt = {});

/// chi^(k) at a single state, k in 1..4.
JumpFunctionalValue chi(int k, const JumpSystem& js, const ModelState& state, const Freq& f,
                        const QuadOptions& opt = {});

/// xi^(j)_t(s, w), j in 1..8.
JumpFunctionalValue xi(int j, const JumpSystem& js, const ModelState& state_t,
                       const ModelState& state_s, const Freq& f, const QuadOptions& opt = {});

struct PsiTerms {
  JumpFunctionalValue psi;
  JumpFunctionalValue psi_bar;
  JumpFunctionalValue psi_tilde;
  cplx sum() const { return psi.value + psi_bar.value + psi_tilde.value; }
};

PsiTerms psi_terms(const JumpSystem& js, const ModelState& state_t, const ModelState& state_s,
                   const Freq& f, const QuadOptions& opt = {});

/// All four chi values, sharing the underlying mark integrals.
std::array<JumpFunctionalValue, 4> chi_all(const JumpSystem& js, const ModelState& state,
                                           const Freq& f, const QuadOptions& opt = {});

/// All eight xi values, sharing the underlying mark integrals.
std::array<JumpFunctionalValue, 8> xi_all(const JumpSystem& js, const ModelState& state_t,
                                          const ModelState& state_s, const Freq& f,
                                          const QuadOptions& opt = {});

}  // namespace cfx
