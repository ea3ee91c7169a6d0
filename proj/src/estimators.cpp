#include "cfx/estimators.hpp"

#include <cmath>

#include "cfx/error.hpp"

namespace cfx {

double spot_var(std::complex<double> cf, double u, bool* clamped) {
  if (u == 0.0 || !std::isfinite(u)) throw Error(Errc::DomainError, "u must be nonzero and finite");
  const double modulus = std::abs(cf);
  if (!(modulus >= 1e-12)) throw Error(Errc::DegenerateCF, "|cf| below 1e-12");
  const double v = -2.0 / (u * u) * std::log(modulus);
  if (clamped) *clamped = v < 0.0;
  return std::max(v, 0.0);
}

namespace {

double combine(double a, double b, double T, double tau) {
  if (!(tau > 1.0)) throw Error(Errc::DomainError, "tau must exceed 1");
  if (!(T > 0.0)) throw Error(Errc::DomainError, "T must be positive");
  // (tau T a - T b) / (tau T - T); T cancels.
  return (tau * a - b) / (tau - 1.0);
}

}  // namespace

double spot_var_debiased(double var_T, double var_Tp, double T, double tau) {
  return combine(var_T, var_Tp, T, tau);
}

double transform_estimate(double var, TransformKind kind) { return transform_value(kind, var); }

double transform_debiased(double v_T, double v_Tp, double T, double tau) {
  return combine(v_T, v_Tp, T, tau);
}

std::vector<NodeEstimate> estimate_nodes(const HFGrid& grid, double u,
                                         const std::vector<std::complex<double>>& cf_T,
                                         const std::vector<std::complex<double>>& cf_Tp,
                                         TransformKind kind) {
  const auto expected = static_cast<std::size_t>(grid.i_max) + 1;
  if (cf_T.size() != expected) throw Error(Errc::GridError, "need one CF value per grid node");
  if (!cf_Tp.empty() && cf_Tp.size() != cf_T.size()) {
    throw Error(Errc::GridError, "T and T' series differ in length");
  }
  std::vector<NodeEstimate> out;
  out.reserve(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    const int i = static_cast<int>(k);
    NodeEstimate e;
    e.i = i;
    e.u = u;
    e.T = grid.T_i(i);
    e.T_prime = grid.Tprime_i(i);
    e.tau = grid.tau;
    e.kind = kind;
    bool clamped = false;
    e.var = spot_var(cf_T[k], u, &clamped);
    if (clamped) e.flags.push_back("clamped_T");
    e.V = transform_estimate(e.var, kind);
    if (!cf_Tp.empty()) {
      e.var_prime = spot_var(cf_Tp[k], u, &clamped);
      if (clamped) e.flags.push_back("clamped_Tprime");
      // The node tenors satisfy T'_i > T_i but not T'_i = tau T_i, so the
      // combination is written with the tenors themselves.
      const double d = e.T_prime - e.T;
      e.var_debiased = (e.T_prime * e.var - e.T * *e.var_prime) / d;
      const double Vp = transform_estimate(*e.var_prime, kind);
      e.V_debiased = (e.T_prime * e.V - e.T * Vp) / d;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EstimatorIncrement> estimator_increments(const std::vector<NodeEstimate>& nodes) {
  std::vector<EstimatorIncrement> out;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const NodeEstimate& a = nodes[k - 1];
    const NodeEstimate& b = nodes[k];
    if (b.i != a.i + 1) throw Error(Errc::GridError, "nodes are not consecutive");
    if (a.u != b.u) throw Error(Errc::GridError, "u differs between nodes");
    if (a.var_debiased.has_value() != b.var_debiased.has_value()) {
      throw Error(Errc::GridError, "debiased estimates missing at some nodes");
    }
    EstimatorIncrement d;
    d.i = b.i;
    d.u = b.u;
    d.T_prev = a.T;
    d.T_cur = b.T;
    d.d_var = a.var - b.var;
    d.d_V = a.V - b.V;
    if (a.var_debiased) {
      d.d_var_debiased = *a.var_debiased - *b.var_debiased;
      d.d_V_debiased = *a.V_debiased - *b.V_debiased;
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace cfx
