#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cfx {

// ---------------------------------------------------------------------------
// Mark measures F(dz) on the real line.

/// F = weight * delta_{size}.
struct PointMass {
  double size = 0.1;
  double weight = 1.0;
};

/// Unit-mass double exponential: density p*eta_up*e^{-eta_up z} on z > 0 and
/// (1-p)*eta_down*e^{eta_down z} on z < 0.
struct DoubleExponential {
  double eta_up = 10.0;
  double eta_down = 10.0;
  double p_up = 0.5;
};

/// Symmetric tempered stable: c * e^{-tempering |z|} / |z|^{1+alpha} dz.
struct TemperedStable {
  double alpha = 1.5;
  double c = 0.1;
  double tempering = 5.0;
};

using MarkMeasure = std::variant<std::monostate, PointMass, DoubleExponential, TemperedStable>;

bool is_empty(const MarkMeasure& m);
bool is_finite_activity(const MarkMeasure& m);
/// Total mass of F; infinite for tempered stable.
double total_mass(const MarkMeasure& m);

/// a0 + a1 * z.
struct AffineMark {
  double a0 = 0.0;
  double a1 = 0.0;
  double operator()(double z) const { return a0 + a1 * z; }
  bool is_zero() const { return a0 == 0.0 && a1 == 0.0; }
};

/// b0 + b1 * |z|.
struct RadialMark {
  double b0 = 0.0;
  double b1 = 0.0;
  double operator()(double z) const { return b0 + b1 * std::abs(z); }
  bool is_zero() const { return b0 == 0.0 && b1 == 0.0; }
};

// ---------------------------------------------------------------------------
// Specification.

/// Jump block. Every coefficient function is derived from a scalar state with
/// its own dynamics, so simulation and the jump functionals describe the same
/// process:
///   gamma(t,z)       = g_t * z                 dg = g_drift dt + g_vol dW + g_jump z' (mu - nu)
///   gamma^sigma(t,z) = h_t * shape(z)          dh = h_drift dt + h_vol dW
///   lambda(t,z)      = l_t                     dl = kappa (theta - l) dt + l_vol dW + excite(z') (mu - nu)
/// which gives sigma^gamma(z) = g_vol z, gamma^gamma(z,z') = g_jump z z',
/// sigma^{lambda,(1)}(z) = l_vol and gamma^lambda(z,z',v') = excite(z') 1{v' <= lambda(z')}.
struct JumpSpec {
  MarkMeasure marks;

  double gamma_scale0 = 1.0;
  double gamma_drift = 0.0;
  double gamma_vol = 0.0;
  double gamma_jump = 0.0;

  AffineMark gamma_sigma_shape;
  double gamma_sigma_scale0 = 1.0;
  double gamma_sigma_drift = 0.0;
  double gamma_sigma_vol = 0.0;

  double intensity0 = 1.0;
  double intensity_kappa = 0.0;
  double intensity_theta = 1.0;
  double intensity_vol = 0.0;
  RadialMark intensity_excitation;
};

/// Coefficients of sigma's own coefficients. The vol-of-vol-of-vol entries
/// are the (constant) third layer.
struct SecondLayer {
  double sigma_drift = 0.0;   // constant part of alpha^sigma
  double sigma_kappa = 0.0;   // alpha^sigma = sigma_drift + sigma_kappa (sigma_theta - sigma)
  double sigma_theta = 0.0;
  double ss_drift = 0.0;      // d sigma^sigma = ss_drift dt + ss_vol dW
  double ss_vol = 0.0;
  double perp_drift = 0.0;    // d sigmabar^sigma = perp_drift dt + perp_vol dW
  double perp_vol = 0.0;
};

struct ModelSpec {
  double x0 = 0.0;
  double drift_alpha = 0.0;
  double vol_sigma0 = 0.2;
  double vol_of_vol_ss = 0.0;
  double vol_of_vol_perp = 0.0;
  SecondLayer second_layer;
  JumpSpec jumps;
  double activity_exponent_r = 1.0;
  int hidden_layers = 3;
};

/// Frozen coefficient values at one time point.
struct ModelState {
  double time = 0.0;
  double x = 0.0;
  double sigma = 0.2;
  double alpha = 0.0;
  double sigma_sigma = 0.0;
  double sigma_perp = 0.0;
  double gamma_scale = 1.0;
  double gamma_sigma_scale = 1.0;
  double intensity_scale = 1.0;
};

// ---------------------------------------------------------------------------
// Assumption checks.

struct IntegralCheck {
  std::string name;
  double value = 0.0;      // +inf when divergence was detected
  bool finite = true;
};

struct ValidityReport {
  std::vector<IntegralCheck> integrals;
  bool assumption1_integrability = true;   // int |gamma|^r nu, int |gamma|^2 nu, int |gamma^sigma|^2 nu
  bool assumption2_summable = true;        // int |gamma| nu and int |gamma^sigma| nu
  bool intensity_nonnegative = true;
  bool special_semimartingale = true;      // no big-jump slot exists
  std::vector<std::string> not_checked;

  bool all_pass() const {
    return assumption1_integrability && assumption2_summable && intensity_nonnegative &&
           special_semimartingale;
  }
  const IntegralCheck* find(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Jump system: the coefficient functions of the spec evaluated at a state.

class JumpSystem {
 public:
  JumpSystem() = default;
  explicit JumpSystem(JumpSpec spec) : spec_(std::move(spec)) {}

  const JumpSpec& spec() const { return spec_; }
  const MarkMeasure& marks() const { return spec_.marks; }
  bool empty() const { return is_empty(spec_.marks); }

  double gamma(const ModelState& s, double z) const { return s.gamma_scale * z; }
  double gamma_sigma(const ModelState& s, double z) const {
    return s.gamma_sigma_scale * spec_.gamma_sigma_shape(z);
  }
  double sigma_gamma(double z) const { return spec_.gamma_vol * z; }
  /// gamma^gamma(z, z') = coef * z * z'.
  double gamma_gamma_coef() const { return spec_.gamma_jump; }
  double gamma_gamma(double z, double zp) const { return spec_.gamma_jump * z * zp; }
  /// lambda(t,z) with base(z) = 1.
  double intensity(const ModelState& s, double /*z*/) const { return s.intensity_scale; }
  double sigma_lambda1(double /*z*/) const { return spec_.intensity_vol; }
  /// gamma^lambda(z, z', v') on {0 <= v' <= lambda(z')}; zero elsewhere.
  double gamma_lambda(double /*z*/, double zp) const { return spec_.intensity_excitation(zp); }

 private:
  JumpSpec spec_;
};

class Model {
 public:
  const ModelSpec& spec() const { return spec_; }
  const JumpSystem& jumps() const { return jumps_; }
  const ValidityReport& validity() const { return validity_; }

  ModelState initial_state() const;
  /// alpha^sigma at a given sigma.
  double sigma_drift(double sigma) const {
    const auto& l = spec_.second_layer;
    return l.sigma_drift + l.sigma_kappa * (l.sigma_theta - sigma);
  }
  /// True when every coefficient stays at its initial value.
  bool constant_coefficients() const;
  /// True when the second Brownian motion enters the dynamics.
  bool uses_second_brownian() const;

  friend Model build_model(const ModelSpec& spec);

 private:
  ModelSpec spec_;
  JumpSystem jumps_;
  ValidityReport validity_;
};

/// Validates the spec and runs the numeric integrability checks.
/// Throws Error(InvalidSpec).
Model build_model(const ModelSpec& spec);

/// Recomputes the validity report (deterministic).
ValidityReport assumption_report(const Model& model);

// Common specs used by tests, the harness and the CLI.
ModelSpec black_scholes_spec(double sigma, double alpha = 0.0);

}  // namespace cfx
