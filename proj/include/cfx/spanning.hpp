#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "cfx/cfgrid.hpp"
#include "cfx/mcsim.hpp"
#include "cfx/model.hpp"

namespace cfx {

enum class CurveSource { closed_form, mc };
std::string to_string(CurveSource s);

/// Out-of-the-money option prices on an ascending log-strike grid: puts for
/// k <= x_t, calls above. Zero rates and dividends.
struct OptionCurve {
  double x_t = 0.0;
  double T = 0.0;
  Eigen::ArrayXd strikes;
  Eigen::ArrayXd prices;
  Eigen::ArrayXd std_error;  // zero for closed-form curves
  CurveSource source = CurveSource::closed_form;

  bool is_put(Eigen::Index j) const { return strikes[j] <= x_t; }
};

/// Uniform log-strike grid x_t +- coverage_sds * sigma sqrt(T). The spacing is
/// the largest value <= sigma sqrt(T) / 50 that puts x_t on a node.
/// Throws Error(DomainError) for coverage_sds < 6 or non-positive sigma/T.
Eigen::ArrayXd strike_grid_design(double sigma_guess, double T, double coverage_sds, double x_t = 0.0,
                                  int points_per_sd = 50);

/// Black-Scholes OTM values. Throws Error(DomainError) unless sigma > 0 and T > 0.
OptionCurve bs_option_curve(double x_t, double sigma, double T, const Eigen::ArrayXd& k_grid);

/// Monte Carlo OTM values from forward paths started at `state`.
OptionCurve mc_option_curve(const Model& model, const ModelState& state, double T,
                            const Eigen::ArrayXd& k_grid, std::size_t n_paths, std::uint64_t seed,
                            const SimOptions& opt = {});

struct SpanOptions {
  double tail_tol = 1e-8;   // relative to e^{x_t}
  bool tail_stubs = true;
};

/// CF at tenor T from an option curve: trapezoid over the grid plus an
/// exponential tail stub per wing. std_error holds a discretization estimate
/// (difference to the same rule on every other node, divided by 3).
/// Throws Error(TailNotDecayed) when an end price exceeds tail_tol e^{x_t}.
CFGrid span_cf(const OptionCurve& curve, const Eigen::ArrayXd& u_grid, double T,
               const SpanOptions& opt = {});

}  // namespace cfx
