#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfx/jumpcalc.hpp"
#include "cfx/model.hpp"
#include "cfx/transform.hpp"

namespace cfx {

/// High-frequency grid t_i = t - i delta_n, T_i = T + i delta_n and
/// T'_i = tau T + i delta_n, for i = 0..i_max.
struct HFGrid {
  double t = 0.0;
  double delta_n = 0.0;
  double T = 0.0;
  double tau = 1.5;
  int i_max = 1;

  double t_i(int i) const { return t - i * delta_n; }
  double T_i(int i) const { return T + i * delta_n; }
  double Tprime() const { return tau * T; }
  double Tprime_i(int i) const { return tau * T + i * delta_n; }
};

/// Throws Error(GridError) unless delta_n > 0, T > 0, tau > 1, i_max >= 1
/// and delta_n / T < 1.
HFGrid make_hfgrid(double t, double delta_n, double T, double tau, int i_max);

/// Theta_{t,T}(w) = exp(i w alpha T - w^2 sigma^2 T / 2 + T phi_t(w)) at w = f.u_T.
cplx theta_factor(const Model& model, const ModelState& state, double T, const Freq& f,
                  const QuadOptions& opt = {});

/// eta_{t,T}(w) = (i w^3 T^2 sigma^2 sigma^sigma + w^2 sigma T^2 chi1 - i w T^2 chi2
///                 - i w T^2 sigma chi3 - T^2 chi4) / 2 at w = f.u_T.
cplx eta_correction(const Model& model, const ModelState& state, double T, const Freq& f,
                    const QuadOptions& opt = {});

/// Theta (1 - eta). The O(T) layer C_t(u) T is not known in closed form and
/// is left out.
cplx cf_first_order(const Model& model, const ModelState& state, double T, const Freq& f,
                    const QuadOptions& opt = {});

/// Lambda_{t,T}(s, w) with carrier state_t and frozen state_s.
cplx lambda_expansion(const Model& model, const ModelState& state_t, const ModelState& state_s,
                      double T, const Freq& f, const QuadOptions& opt = {});

struct NamedTerm {
  std::string name;
  cplx value;
};

/// Increment of the conditional CF between grid nodes i-1 and i.
struct IncrementDecomposition {
  int i = 0;
  double u = 0.0;
  cplx leading{0.0, 0.0};          // Lambda_{t_{i-1},T_{i-1}}(t_i,.) - Lambda_{t_i,T_i}(t_i,.)
  std::vector<NamedTerm> corrections;  // the lines of L^{n,i}
  cplx boundary{0.0, 0.0};         // L'^{n,i}
  cplx theta_prefactor{0.0, 0.0};  // Theta_{t_i,T_{i-1}}(u_{T_{i-1}})

  cplx corrections_sum() const;
  /// theta_prefactor * (sum of corrections + boundary).
  cplx total() const;
};

/// `prev` is the state at t_{i-1}, `cur` the state at t_i.
/// Throws Error(GridError) when i is outside 1..i_max.
IncrementDecomposition increment_cf_expansion(const Model& model, const HFGrid& grid, int i,
                                              const ModelState& prev, const ModelState& cur,
                                              double u, const QuadOptions& opt = {});

/// (Delta Phi, Delta Psi) between nodes i-1 and i, frozen at t_i.
std::pair<double, double> bias_terms_phi_psi(const Model& model, const HFGrid& grid, int i,
                                             const ModelState& prev, const ModelState& cur,
                                             double u, const QuadOptions& opt = {});

enum class TermStatus { modeled, residual, cancelled, diagnostic };
std::string_view to_string(TermStatus s);

struct ReportTerm {
  std::string name;
  std::optional<cplx> value;  // empty for existence-only terms
  TermStatus status = TermStatus::modeled;
  std::vector<std::string> order_tags;
};

struct ExpansionReport {
  std::string kind;  // "cf_increment", "variance_increment" or "transform_increment"
  int i = 0;
  double u = 0.0;
  double T = 0.0;
  double delta_n = 0.0;
  double tau = 0.0;
  TransformKind transform = TransformKind::x;
  bool debiased = false;
  std::vector<ReportTerm> terms;

  const ReportTerm* find(const std::string& name) const;
  /// Sum of the valued terms with status `modeled`.
  cplx modeled_total() const;
};

ExpansionReport to_report(const IncrementDecomposition& d, const HFGrid& grid);

/// Increment of sigma^2_{t,T}(u) split into the spot-variance increment, the
/// Phi and Psi terms and the existence-only residual bucket.
/// Throws Error(DegenerateCF) when a Lambda modulus falls below 1e-12.
ExpansionReport increment_variance_expansion(const Model& model, const HFGrid& grid, int i,
                                             const ModelState& prev, const ModelState& cur,
                                             double u, const QuadOptions& opt = {});

/// Increment of F(sigma^2_{t,T}(u)), optionally two-maturity debiased. The
/// gamma^sigma term is -F'(sigma^2) T_{i-1} sigma int Delta gamma^sigma lambda F(dz).
/// Throws Error(DegenerateVariance) when sigma^2 <= 1e-12 at either node.
ExpansionReport increment_transform_expansion(const Model& model, const HFGrid& grid, int i,
                                              const ModelState& prev, const ModelState& cur,
                                              double u, TransformKind kind, bool debias,
                                              const QuadOptions& opt = {});

/// int Delta gamma^sigma(z) lambda(t_i, z) F(dz) between prev and cur.
double gamma_sigma_increment_integral(const Model& model, const ModelState& prev,
                                      const ModelState& cur, const QuadOptions& opt = {});

}  // namespace cfx
