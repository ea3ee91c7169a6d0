#include "cfx/spanning.hpp"

#include <cmath>
#include <complex>

#include "cfx/error.hpp"

namespace cfx {

namespace {

using cplx = std::complex<double>;

double norm_cdf(double d) { return 0.5 * std::erfc(-d / std::sqrt(2.0)); }

// Trapezoid of e^{(iw-1)(k-x)} O(k) over nodes 0, stride, 2*stride, ... plus
// exponential tail stubs fitted to the two outermost nodes used.
cplx spanning_integral(const OptionCurve& c, double w, Eigen::Index stride, bool stubs) {
  const Eigen::Index n = c.strikes.size();
  const double h = (c.strikes[n - 1] - c.strikes[0]) / static_cast<double>(n - 1) * stride;
  const cplx a(-1.0, w);
  cplx sum = 0.0;
  for (Eigen::Index j = 0; j < n; j += stride) {
    const double weight = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    sum += weight * std::exp(a * (c.strikes[j] - c.x_t)) * c.prices[j];
  }
  sum *= h;
  if (!stubs) return sum;
  const double p0 = c.prices[0], p1 = c.prices[stride];
  if (p0 > 0.0 && p1 > p0) {
    const double beta = std::log(p1 / p0) / h;
    if (beta > 1.0) sum += p0 * std::exp(a * (c.strikes[0] - c.x_t)) / (beta - 1.0 + cplx(0.0, w));
  }
  const double pn = c.prices[n - 1], pm = c.prices[n - 1 - stride];
  if (pn > 0.0 && pm > pn) {
    const double beta = std::log(pm / pn) / h;
    sum += pn * std::exp(a * (c.strikes[n - 1] - c.x_t)) / (beta + 1.0 - cplx(0.0, w));
  }
  return sum;
}

}  // namespace

std::string to_string(CurveSource s) { return s == CurveSource::mc ? "mc" : "closed_form"; }

Eigen::ArrayXd strike_grid_design(double sigma_guess, double T, double coverage_sds, double x_t,
                                  int points_per_sd) {
  if (!(coverage_sds >= 6.0)) throw Error(Errc::DomainError, "coverage_sds must be >= 6");
  if (!(sigma_guess > 0.0) || !(T > 0.0)) throw Error(Errc::DomainError, "sigma and T must be positive");
  if (points_per_sd < 50) throw Error(Errc::DomainError, "points_per_sd must be >= 50");
  const double sd = sigma_guess * std::sqrt(T);
  const double half = coverage_sds * sd;
  const auto n_half = static_cast<Eigen::Index>(std::ceil(half / (sd / points_per_sd) - 1e-9));
  return Eigen::ArrayXd::LinSpaced(2 * n_half + 1, x_t - half, x_t + half);
}

OptionCurve bs_option_curve(double x_t, double sigma, double T, const Eigen::ArrayXd& k_grid) {
  if (!(sigma > 0.0) || !(T > 0.0)) throw Error(Errc::DomainError, "sigma and T must be positive");
  OptionCurve c;
  c.x_t = x_t;
  c.T = T;
  c.strikes = k_grid;
  c.prices.resize(k_grid.size());
  c.std_error = Eigen::ArrayXd::Zero(k_grid.size());
  c.source = CurveSource::closed_form;
  const double sd = sigma * std::sqrt(T);
  const double spot = std::exp(x_t);
  for (Eigen::Index j = 0; j < k_grid.size(); ++j) {
    const double m = k_grid[j] - x_t;
    const double d1 = (-m + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    const double v = c.is_put(j) ? std::exp(m) * norm_cdf(-d2) - norm_cdf(-d1)
                                 : norm_cdf(d1) - std::exp(m) * norm_cdf(d2);
    c.prices[j] = spot * std::max(v, 0.0);
  }
  return c;
}

OptionCurve mc_option_curve(const Model& model, const ModelState& state, double T,
                            const Eigen::ArrayXd& k_grid, std::size_t n_paths, std::uint64_t seed,
                            const SimOptions& opt) {
  if (n_paths < 2) throw Error(Errc::DomainError, "n_paths must be >= 2");
  const Eigen::ArrayXd s = terminal_samples(model, state, T, n_paths, seed, opt).exp();
  OptionCurve c;
  c.x_t = state.x;
  c.T = T;
  c.strikes = k_grid;
  c.prices.resize(k_grid.size());
  c.std_error.resize(k_grid.size());
  c.source = CurveSource::mc;
  const double n = static_cast<double>(n_paths);
  for (Eigen::Index j = 0; j < k_grid.size(); ++j) {
    const double strike = std::exp(k_grid[j]);
    const Eigen::ArrayXd pay = (c.is_put(j) ? Eigen::ArrayXd(strike - s) : Eigen::ArrayXd(s - strike)).max(0.0);
    const double mean = pay.mean();
    c.prices[j] = mean;
    c.std_error[j] = std::sqrt((pay - mean).square().sum() / (n - 1.0) / n);
  }
  return c;
}

CFGrid span_cf(const OptionCurve& curve, const Eigen::ArrayXd& u_grid, double T, const SpanOptions& opt) {
  const Eigen::Index n = curve.strikes.size();
  if (n < 5 || curve.prices.size() != n) throw Error(Errc::DomainError, "option curve needs >= 5 strikes");
  if (!(T > 0.0)) throw Error(Errc::DomainError, "T must be positive");
  const double tol = opt.tail_tol * std::exp(curve.x_t);
  if (curve.prices[0] > tol || curve.prices[n - 1] > tol) {
    throw Error(Errc::TailNotDecayed, "option prices at the grid ends exceed the tail tolerance; widen the strike grid");
  }
  CFGrid g;
  g.u = u_grid;
  g.T = T;
  g.provenance = "spanning";
  g.value.resize(u_grid.size());
  g.std_error.resize(u_grid.size());
  const double scale = std::exp(-curve.x_t);
  const bool coarse_ok = (n - 1) % 2 == 0;
  for (Eigen::Index j = 0; j < u_grid.size(); ++j) {
    const double w = u_grid[j] / std::sqrt(T);
    const cplx weight(w * w, w);
    const cplx fine = 1.0 - weight * scale * spanning_integral(curve, w, 1, opt.tail_stubs);
    g.value[j] = fine;
    if (coarse_ok) {
      const cplx coarse = 1.0 - weight * scale * spanning_integral(curve, w, 2, opt.tail_stubs);
      g.std_error[j] = std::abs(fine - coarse) / 3.0;
    } else {
      g.std_error[j] = 0.0;
    }
  }
  return g;
}

}  // namespace cfx
