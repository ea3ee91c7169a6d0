#include "cfx/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "cfx/error.hpp"
#include "cfx/estimators.hpp"
#include "cfx/expansion.hpp"
#include "cfx/io.hpp"
#include "cfx/levy.hpp"
#include "cfx/mcsim.hpp"
#include "cfx/spanning.hpp"

namespace cfx {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Output {
  std::filesystem::path dir;
  RunResult result;

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(Errc::ConfigError, "cannot write " + (dir / name).string());
    result.files.push_back(name);
    return f;
  }
  void check(std::string name, double value, std::string rel, double threshold) {
    result.checks.push_back(make_check(std::move(name), value, std::move(rel), threshold));
  }
};

SimOptions sim_options(const ExperimentConfig& c) {
  SimOptions o;
  o.steps_per_leg = c.mc.steps_per_leg;
  o.threads = c.mc.threads;
  o.sigma_floor = c.mc.sigma_floor;
  o.max_floor_fraction = c.mc.max_floor_fraction;
  return o;
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> nums(std::initializer_list<double> v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(format_number(x));
  return out;
}

void oracle_levy(const ExperimentConfig& c, const Model& m, Output& out) {
  const ModelState s = m.initial_state();
  auto f = out.open("oracle_levy.csv");
  CsvWriter w(f);
  w.row({"u", "T", "re_theta", "im_theta", "re_exact", "im_exact", "abs_err"});
  double worst = 0.0;
  for (double T : c.grid.T_list) {
    for (double u : c.grid.u_grid) {
      const cplx theta = theta_factor(m, s, T, make_freq(u, T));
      const cplx exact = levy_cf_exact(m, s, T, u);
      const double err = std::abs(theta - exact);
      worst = std::max(worst, err);
      w.row(nums({u, T, theta.real(), theta.imag(), exact.real(), exact.imag(), err}));
    }
  }
  out.check("max |Theta - L_exact|", worst, "<", c.threshold("oracle_abs_err"));
}

void write_fit(CsvWriter& w, const std::string& series, const SlopeFit& f) {
  w.row({series, format_number(f.slope), format_number(f.slope_stderr), format_number(f.intercept),
         std::to_string(f.log_scale.size())});
}

void order_fit_eta(const ExperimentConfig& c, const Model& m, Output& out) {
  const ModelState s = m.initial_state();
  const SimOptions opt = sim_options(c);
  const Eigen::ArrayXd u = to_array(c.grid.u_grid);
  const auto check_col = std::find(c.grid.u_grid.begin(), c.grid.u_grid.end(), c.grid.u_check);
  if (check_col == c.grid.u_grid.end()) throw Error(Errc::ConfigError, "grid.u_check must be one of grid.u_grid");
  const auto jc = static_cast<Eigen::Index>(check_col - c.grid.u_grid.begin());

  std::vector<double> Ts = c.grid.T_list;
  const bool extra = std::find(Ts.begin(), Ts.end(), c.grid.T_check) == Ts.end();
  if (extra) Ts.push_back(c.grid.T_check);

  auto f = out.open("eta_study.csv");
  CsvWriter w(f);
  w.row({"T", "u", "re_mc", "im_mc", "stderr", "n", "re_theta", "im_theta", "re_theta_eta", "im_theta_eta",
         "res_theta", "res_eta"});
  std::vector<double> scale, r_theta, r_eta;
  double check_theta = 0.0, check_eta = 0.0, check_se = 0.0;
  for (std::size_t k = 0; k < Ts.size(); ++k) {
    const double T = Ts[k];
    const CFGrid g = conditional_cf_mc(m, s, T, u, c.mc.n_paths, c.mc.seed, opt);
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const Freq fr = make_freq(u[j], T);
      const cplx th = theta_factor(m, s, T, fr);
      const cplx te = cf_first_order(m, s, T, fr);
      const double a = std::abs(g.value[j] - th), b = std::abs(g.value[j] - te);
      w.row(nums({T, u[j], g.value[j].real(), g.value[j].imag(), g.std_error[j], double(g.n_paths), th.real(),
                  th.imag(), te.real(), te.imag(), a, b}));
      if (j != jc) continue;
      if (k < c.grid.T_list.size()) {
        scale.push_back(T);
        r_theta.push_back(a);
        r_eta.push_back(b);
      }
      if (T == c.grid.T_check) {
        check_theta = a;
        check_eta = b;
        check_se = g.std_error[j];
      }
    }
  }
  const SlopeFit f0 = fit_order(scale, r_theta);
  const SlopeFit f1 = fit_order(scale, r_eta);
  auto fits = out.open("slope_fits.csv");
  CsvWriter fw(fits);
  fw.row({"series", "slope", "slope_stderr", "intercept", "n"});
  write_fit(fw, "residual_theta", f0);
  write_fit(fw, "residual_theta_eta", f1);
  out.check("slope(with eta) - slope(without eta) at u_check", f1.slope - f0.slope, ">=",
            c.threshold("eta_slope_gain"));
  // Reduction that survives the MC noise: the eta residual is inflated by k stderr.
  const double noisy = check_eta + c.threshold("eta_noise_sds") * check_se;
  out.check("eta residual reduction at (T_check, u_check), net of noise", 1.0 - noisy / check_theta, ">=",
            c.threshold("eta_reduction"));
}

void order_fit_increment(const ExperimentConfig& c, const Model& m, Output& out) {
  const ModelState s = m.initial_state();
  auto f = out.open("increment_study.csv");
  CsvWriter w(f);
  w.row({"T", "delta_n", "i", "u", "re_exact", "im_exact", "re_approx", "im_approx", "ratio", "residual_prop",
         "residual_lambda"});
  std::vector<double> ratios, scale;
  double worst_prop = 0.0, worst_lambda = 0.0;
  for (double T : c.grid.T_list) {
    const double dn = c.grid.delta_ratio * T;
    const HFGrid grid = make_hfgrid(c.grid.t, dn, T, c.grid.tau, c.grid.i_max);
    double level = 0.0;
    for (int i = 1; i <= grid.i_max; ++i) {
      for (double u : c.grid.u_grid) {
        const cplx exact = levy_cf_exact(m, s, grid.T_i(i - 1), u) - levy_cf_exact(m, s, grid.T_i(i), u);
        const IncrementDecomposition d = increment_cf_expansion(m, grid, i, s, s, u);
        const cplx approx = d.leading + d.theta_prefactor * d.boundary;
        const double ratio = std::abs(exact - approx) / (dn / std::sqrt(T));
        const double rp = std::abs(exact - d.total()), rl = std::abs(exact - d.leading);
        worst_prop = std::max(worst_prop, rp);
        worst_lambda = std::max(worst_lambda, rl);
        level = std::max(level, ratio);
        w.row(nums({T, dn, double(i), u, exact.real(), exact.imag(), approx.real(), approx.imag(), ratio, rp, rl}));
      }
    }
    scale.push_back(T);
    ratios.push_back(level);
  }
  // Order the levels from the largest T down.
  std::vector<std::size_t> idx(scale.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scale[a] > scale[b]; });
  double increases = 0.0;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (!(ratios[idx[k]] < ratios[idx[k - 1]])) increases += 1.0;
  }
  out.check("non-decreasing steps of the scaled residual", increases, "<=", 0.0);
  out.check("final / initial scaled residual", ratios[idx.back()] / ratios[idx.front()], "<",
            c.threshold("increment_final_ratio"));
  out.result.manifest["info"] = {{"max |dL_exact - Theta (L + L')|", worst_prop},
                                 {"max |dL_exact - dLambda|", worst_lambda}};
}

cplx gaussian_cf(double u, double sigma, double T) {
  const double w = u / std::sqrt(T);
  return std::exp(cplx(-0.5 * u * u * sigma * sigma, -0.5 * w * sigma * sigma * T));
}

void spanning_roundtrip(const ExperimentConfig& c, const Model& m, Output& out) {
  const double sigma = m.spec().vol_sigma0;
  const double T = c.grid.T;
  const double x = m.spec().x0;
  const Eigen::ArrayXd u = to_array(c.grid.u_grid);
  SpanOptions so;
  so.tail_tol = c.spanning.tail_tol;
  const auto span_at = [&](int pts) {
    const Eigen::ArrayXd k = strike_grid_design(sigma, T, c.spanning.coverage, x, pts);
    return std::make_pair(bs_option_curve(x, sigma, T, k), span_cf(bs_option_curve(x, sigma, T, k), u, T, so));
  };
  const auto [curve, g] = span_at(c.spanning.points_per_sd);
  const CFGrid fine = span_at(2 * c.spanning.points_per_sd).second;

  double err = 0.0, err_fine = 0.0, var_err = 0.0;
  std::vector<cplx> cfs;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const cplx exact = gaussian_cf(u[j], sigma, T);
    err = std::max(err, std::abs(g.value[j] - exact));
    err_fine = std::max(err_fine, std::abs(fine.value[j] - exact));
    var_err = std::max(var_err, std::abs(spot_var(g.value[j], u[j]) - sigma * sigma));
  }
  {
    auto f = out.open("option_curve.csv");
    write_option_curve_csv(f, curve);
  }
  {
    auto f = out.open("cf_spanned.csv");
    write_cfgrid_csv(f, g);
  }
  {
    auto f = out.open("estimates.csv");
    std::vector<NodeEstimate> rows;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      NodeEstimate e;
      e.u = u[j];
      e.T = T;
      bool clamped = false;
      e.var = spot_var(g.value[j], u[j], &clamped);
      if (clamped) e.flags.push_back("clamped_T");
      e.kind = c.transform;
      e.V = transform_estimate(e.var, c.transform);
      rows.push_back(e);
    }
    write_estimates_csv(f, rows);
  }
  out.check("max |L_span - L_gauss|", err, "<", c.threshold("span_cf_err"));
  out.check("max |sigma2_hat - sigma2|", var_err, "<", c.threshold("span_var_err"));
  out.check("CF error ratio when halving strike spacing", err / err_fine, ">=", c.threshold("span_halving_factor"));
}

void debias_study(const ExperimentConfig& c, const Model& m, Output& out) {
  const double T = c.grid.T;
  const HFGrid grid = make_hfgrid(c.grid.t, c.grid.delta_ratio * T, T, c.grid.tau, c.grid.i_max);
  SimOptions opt = sim_options(c);
  const Path path = simulate_path(m, c.grid.t, c.mc.path_dt, c.mc.seed, opt);

  std::vector<ExpansionReport> reports;
  double worst_absent = 0.0, worst_match = 0.0, smallest_present = INFINITY;
  for (int i = 1; i <= grid.i_max; ++i) {
    const ModelState prev = frozen_state(m, path, grid.t_i(i - 1));
    const ModelState cur = frozen_state(m, path, grid.t_i(i));
    // Independent evaluation of -F'(sigma^2) T_{i-1} sigma int Delta gamma^sigma lambda F(dz).
    const auto& sh = m.spec().jumps.gamma_sigma_shape;
    const double dh = prev.gamma_sigma_scale - cur.gamma_sigma_scale;
    QuadOptions qo;
    qo.rel_tol = 1e-12;
    const double integral =
        m.jumps().empty()
            ? 0.0
            : integrate([&](double z) { return cplx(dh * sh(z) * cur.intensity_scale, 0.0); }, m.jumps().marks(), qo)
                  .value.real();
    const double quad = -transform_derivative(c.transform, cur.sigma * cur.sigma) * grid.T_i(i - 1) * cur.sigma * integral;
    for (double u : c.grid.u_grid) {
      const ExpansionReport plain = increment_transform_expansion(m, grid, i, prev, cur, u, c.transform, false);
      const ExpansionReport deb = increment_transform_expansion(m, grid, i, prev, cur, u, c.transform, true);
      const ReportTerm* p = plain.find("gamma_sigma_term");
      const ReportTerm* d = deb.find("gamma_sigma_term");
      if (!p || !d || !p->value || !d->value) throw Error(Errc::DomainError, "gamma_sigma_term missing");
      smallest_present = std::min(smallest_present, std::abs(*p->value));
      worst_absent = std::max(worst_absent, std::abs(*d->value));
      const cplx diff = plain.modeled_total() - deb.modeled_total();
      worst_match = std::max(worst_match, std::abs(diff - quad) / std::max(std::abs(quad), 1e-300));
      reports.push_back(plain);
      reports.push_back(deb);
    }
  }
  {
    auto f = out.open("expansion_reports.csv");
    write_expansion_csv(f, reports);
  }
  {
    auto f = out.open("expansion_reports.json");
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    f << arr.dump(2) << '\n';
  }
  out.check("min |gamma_sigma term| in plain reports", smallest_present, ">", c.threshold("debias_absent"));
  out.check("max |gamma_sigma term| in debiased reports", worst_absent, "<", c.threshold("debias_absent"));
  out.check("max rel |(plain - debiased) - quadrature|", worst_match, "<", c.threshold("debias_match_rel"));

  // Synthetic estimator inputs with a bias affine in the tenor.
  const double b = 0.3;
  std::vector<cplx> cT, cTp;
  std::vector<double> truth;
  const double u = c.grid.u_check;
  for (int i = 0; i <= grid.i_max; ++i) {
    const ModelState s = frozen_state(m, path, grid.t_i(i));
    truth.push_back(s.sigma * s.sigma);
    cT.push_back(std::exp(-0.5 * u * u * (truth.back() + b * grid.T_i(i))));
    cTp.push_back(std::exp(-0.5 * u * u * (truth.back() + b * grid.Tprime_i(i))));
  }
  const auto nodes = estimate_nodes(grid, u, cT, cTp, c.transform);
  double synth = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) synth = std::max(synth, std::abs(*nodes[k].var_debiased - truth[k]));
  {
    auto f = out.open("estimates.csv");
    write_estimates_csv(f, nodes);
  }
  out.check("max |debiased synthetic variance - truth|", synth, "<", c.threshold("synthetic_debias_err"));
}

}  // namespace

Check make_check(std::string name, double value, std::string relation, double threshold) {
  bool pass = false;
  if (relation == "<") pass = value < threshold;
  else if (relation == "<=") pass = value <= threshold;
  else if (relation == ">") pass = value > threshold;
  else if (relation == ">=") pass = value >= threshold;
  else throw Error(Errc::ConfigError, "unknown relation " + relation);
  return {std::move(name), value, std::move(relation), threshold, pass};
}

bool RunResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

RunResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Model model = build_model(config.model);
  Output out{out_dir, {}};
  out.result.manifest = json::object();
  switch (config.kind) {
    case ExperimentKind::oracle_levy: oracle_levy(config, model, out); break;
    case ExperimentKind::order_fit_eta: order_fit_eta(config, model, out); break;
    case ExperimentKind::order_fit_increment: order_fit_increment(config, model, out); break;
    case ExperimentKind::spanning_roundtrip: spanning_roundtrip(config, model, out); break;
    case ExperimentKind::debias_study: debias_study(config, model, out); break;
  }

  json checks = json::array();
  for (const auto& c : out.result.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}});
  }
  json& man = out.result.manifest;
  man["tool"] = "cfx";
  man["version"] = kVersion;
  man["experiment"] = {{"name", config.name}, {"kind", std::string(to_string(config.kind))},
                       {"transform", std::string(to_string(config.transform))}};
  man["model"] = to_json(config.model);
  man["model_hash"] = model_hash(config.model);
  man["validity"] = to_json(model.validity());
  man["grid"] = {{"t", config.grid.t},         {"T", config.grid.T},          {"delta_ratio", config.grid.delta_ratio},
                 {"tau", config.grid.tau},     {"i_max", config.grid.i_max},  {"u_grid", config.grid.u_grid},
                 {"T_list", config.grid.T_list}, {"u_check", config.grid.u_check}, {"T_check", config.grid.T_check}};
  man["mc"] = {{"n_paths", config.mc.n_paths},   {"steps_per_leg", config.mc.steps_per_leg},
               {"path_dt", config.mc.path_dt},   {"seed", config.mc.seed},
               {"threads", config.mc.threads},   {"sigma_floor", config.mc.sigma_floor},
               {"max_floor_fraction", config.mc.max_floor_fraction}};
  man["spanning"] = {{"coverage", config.spanning.coverage},
                     {"points_per_sd", config.spanning.points_per_sd},
                     {"tail_tol", config.spanning.tail_tol}};
  man["thresholds"] = config.thresholds;
  man["checks"] = checks;
  man["outputs"] = out.result.files;
  man["pass"] = out.result.pass();
  std::ofstream f(out_dir / "manifest.json", std::ios::binary);
  f << man.dump(2) << '\n';
  return out.result;
}

SlopeFit fit_order(const std::vector<double>& scale, const std::vector<double>& residual,
                   std::optional<double> threshold) {
  if (scale.size() != residual.size()) throw Error(Errc::DomainError, "scale and residual sizes differ");
  if (scale.size() < 4) throw Error(Errc::InsufficientPoints, "need at least 4 points");
  const auto [lo, hi] = std::minmax_element(scale.begin(), scale.end());
  if (!(*lo > 0.0)) throw Error(Errc::DomainError, "scales must be positive");
  if (*hi / *lo < 8.0) throw Error(Errc::InsufficientPoints, "scales must span at least a factor 8");
  const auto n = static_cast<Eigen::Index>(scale.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  SlopeFit fit;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r = residual[static_cast<std::size_t>(k)];
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(Errc::DomainError, "residuals must be positive and finite");
    X(k, 0) = 1.0;
    X(k, 1) = std::log(scale[static_cast<std::size_t>(k)]);
    y(k) = std::log(r);
    fit.log_scale.push_back(X(k, 1));
    fit.log_residual.push_back(y(k));
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  fit.intercept = beta(0);
  fit.slope = beta(1);
  const double rss = (y - X * beta).squaredNorm();
  const Eigen::Matrix2d cov = (X.transpose() * X).inverse() * (rss / static_cast<double>(n - 2));
  fit.slope_stderr = std::sqrt(std::max(cov(1, 1), 0.0));
  fit.threshold = threshold;
  return fit;
}

}  // namespace cfx
