#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cfx/expansion.hpp"
#include "cfx/transform.hpp"

namespace cfx {

/// -(2/u^2) log|cf|. When |cf| > 1 the negative value is clamped to 0 and
/// *clamped (if given) is set. Throws Error(DegenerateCF) when |cf| < 1e-12
/// and Error(DomainError) when u == 0.
double spot_var(std::complex<double> cf, double u, bool* clamped = nullptr);

/// (T' var_T - T var_T') / (T' - T) with T' = tau T.
/// Throws Error(DomainError) unless tau > 1 and T > 0.
double spot_var_debiased(double var_T, double var_Tp, double T, double tau);

/// F(var). Throws Error(DomainError) for var <= 0 under the non-identity kinds.
double transform_estimate(double var, TransformKind kind);

/// Debiasing applied on the transform scale: (T' V_T - T V_T') / (T' - T).
double transform_debiased(double v_T, double v_Tp, double T, double tau);

/// Estimates at one HFGrid node: tenor T_i and, when available, T'_i.
struct NodeEstimate {
  int i = 0;
  double u = 0.0;
  double T = 0.0;
  double T_prime = 0.0;
  double tau = 0.0;
  double var = 0.0;
  std::optional<double> var_prime;
  std::optional<double> var_debiased;
  TransformKind kind = TransformKind::x;
  double V = 0.0;
  std::optional<double> V_debiased;
  std::vector<std::string> flags;  // "clamped_T", "clamped_Tprime"
};

/// Builds node estimates for i = 0..cf_T.size()-1 from CF values at
/// (t_i, T_i) and, optionally, (t_i, T'_i). Throws Error(GridError) when the
/// series length is not i_max + 1 or the two series differ in length.
std::vector<NodeEstimate> estimate_nodes(const HFGrid& grid, double u,
                                         const std::vector<std::complex<double>>& cf_T,
                                         const std::vector<std::complex<double>>& cf_Tp,
                                         TransformKind kind);

/// Delta_i X = X(node i-1) - X(node i) for each estimator.
struct EstimatorIncrement {
  int i = 0;
  double u = 0.0;
  double T_prev = 0.0;
  double T_cur = 0.0;
  double d_var = 0.0;
  std::optional<double> d_var_debiased;
  double d_V = 0.0;
  std::optional<double> d_V_debiased;
};

/// First differences along i. Throws Error(GridError) when nodes are not
/// consecutive or u differs between nodes.
std::vector<EstimatorIncrement> estimator_increments(const std::vector<NodeEstimate>& nodes);

}  // namespace cfx
