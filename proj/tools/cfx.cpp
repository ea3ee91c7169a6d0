#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cfx/error.hpp"
#include "cfx/estimators.hpp"
#include "cfx/harness.hpp"
#include "cfx/io.hpp"
#include "cfx/spanning.hpp"

using namespace cfx;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kThresholdFail = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Writes to `path`, or stdout when it is empty or "-".
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::ConfigError, "cannot write " + path);
  fn(out);
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
  ExperimentConfig c = load_config(config_path);
  if (threads >= 0) c.mc.threads = threads;
  const std::string dir = out_dir.empty() ? "runs/" + c.name : out_dir;
  const RunResult r = run(c, dir);
  for (const auto& k : r.checks) {
    std::cout << (k.pass ? "PASS " : "FAIL ") << k.name << ": " << format_number(k.value) << ' ' << k.relation
              << ' ' << format_number(k.threshold) << '\n';
  }
  std::cout << "outputs in " << dir << '\n';
  return r.pass() ? kPass : kThresholdFail;
}

int cmd_span(double sigma, double T, double x0, double coverage, int points, const std::string& curve_path,
             std::vector<double> u, const std::string& curve_out, const std::string& out) {
  if (u.empty()) {
    const Eigen::ArrayXd d = default_u_grid();
    u.assign(d.data(), d.data() + d.size());
  }
  OptionCurve curve;
  if (curve_path.empty()) {
    curve = bs_option_curve(x0, sigma, T, strike_grid_design(sigma, T, coverage, x0, points));
  } else {
    std::ifstream in(curve_path, std::ios::binary);
    if (!in) throw Error(Errc::ConfigError, "cannot read " + curve_path);
    curve = read_option_curve_csv(in, x0, T);
  }
  if (!curve_out.empty()) emit(curve_out, [&](std::ostream& o) { write_option_curve_csv(o, curve); });
  const Eigen::ArrayXd ua = Eigen::Map<const Eigen::ArrayXd>(u.data(), static_cast<Eigen::Index>(u.size()));
  const CFGrid g = span_cf(curve, ua, T);
  emit(out, [&](std::ostream& o) { write_cfgrid_csv(o, g); });
  return kPass;
}

int cmd_estimate(const std::string& cf_path, const std::string& cf_prime_path, const std::string& transform,
                 const std::string& out) {
  std::ifstream in(cf_path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + cf_path);
  const CFGrid g = read_cfgrid_csv(in);
  std::optional<CFGrid> gp;
  if (!cf_prime_path.empty()) {
    std::ifstream inp(cf_prime_path, std::ios::binary);
    if (!inp) throw Error(Errc::ConfigError, "cannot read " + cf_prime_path);
    gp = read_cfgrid_csv(inp);
    if (gp->u.size() != g.u.size() || !(gp->u == g.u).all()) {
      throw Error(Errc::ConfigError, "the two CF files must share the u-grid");
    }
    if (!(gp->T > g.T)) throw Error(Errc::ConfigError, "the second CF file needs the longer tenor");
  }
  const TransformKind kind = parse_transform(transform);
  std::vector<NodeEstimate> rows;
  bool clamped_any = false;
  for (Eigen::Index j = 0; j < g.u.size(); ++j) {
    NodeEstimate e;
    e.u = g.u[j];
    e.T = g.T;
    e.kind = kind;
    bool clamped = false;
    e.var = spot_var(g.value[j], e.u, &clamped);
    if (clamped) e.flags.push_back("clamped_T");
    clamped_any = clamped_any || clamped;
    e.V = transform_estimate(e.var, kind);
    if (gp) {
      e.T_prime = gp->T;
      e.tau = gp->T / g.T;
      e.var_prime = spot_var(gp->value[j], e.u, &clamped);
      if (clamped) e.flags.push_back("clamped_Tprime");
      e.var_debiased = spot_var_debiased(e.var, *e.var_prime, e.T, e.tau);
      e.V_debiased = transform_debiased(e.V, transform_estimate(*e.var_prime, kind), e.T, e.tau);
    }
    rows.push_back(std::move(e));
  }
  emit(out, [&](std::ostream& o) { write_estimates_csv(o, rows); });
  return kPass;
}

int cmd_validate(const std::string& path) {
  const ModelSpec spec = parse_model_toml(read_file(path));
  try {
    const Model m = build_model(spec);
    nlohmann::json j = to_json(m.validity());
    j["model_hash"] = model_hash(spec);
    std::cout << j.dump(2) << '\n';
    return m.validity().all_pass() ? kPass : kThresholdFail;
  } catch (const Error& e) {
    if (e.code() != Errc::InvalidSpec) throw;
    std::cout << nlohmann::json{{"valid", false}, {"error", e.what()}}.dump(2) << '\n';
    return kThresholdFail;
  }
}

int cmd_fit(const std::string& path, const std::string& xcol, const std::string& ycol,
            std::optional<double> min_slope) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + path);
  const CsvTable t = read_csv_table(in);
  std::vector<double> x, y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    x.push_back(t.number(r, xcol));
    y.push_back(std::abs(t.number(r, ycol)));
  }
  const SlopeFit f = fit_order(x, y, min_slope);
  nlohmann::json j = {{"slope", f.slope}, {"slope_stderr", f.slope_stderr}, {"intercept", f.intercept},
                      {"n", f.log_scale.size()}};
  if (min_slope) {
    j["threshold"] = *min_slope;
    j["pass"] = f.slope >= *min_slope;
  }
  std::cout << j.dump(2) << '\n';
  return !min_slope || f.slope >= *min_slope ? kPass : kThresholdFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characteristic-function expansions, option spanning and spot-variance estimators"};
  app.require_subcommand(1);

  std::string config, out_dir;
  int threads = -1;
  auto* run = app.add_subcommand("run", "Run an experiment described by a TOML file");
  run->add_option("config", config, "Experiment configuration")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Output directory (default runs/<name>)");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  double sigma = 0.2, T = 0.25, x0 = 0.0, coverage = 10.0;
  int points = 50;
  std::string curve_in, curve_out, out;
  std::vector<double> u;
  auto* span = app.add_subcommand("span", "Recover the CF from an option curve");
  span->add_option("--sigma", sigma, "Black-Scholes volatility when no curve is given");
  span->add_option("--T", T, "Tenor")->required();
  span->add_option("--x0", x0, "Log spot");
  span->add_option("--coverage", coverage, "Strike grid half-width in standard deviations");
  span->add_option("--points-per-sd", points, "Strike nodes per standard deviation");
  span->add_option("--curve", curve_in, "Option curve CSV (k, price[, stderr, wing])")->check(CLI::ExistingFile);
  span->add_option("--write-curve", curve_out, "Also write the option curve used");
  span->add_option("--u", u, "Frequencies (default 11 points on [0.5, 3])");
  span->add_option("-o,--out", out, "CF grid CSV (default stdout)");

  std::string cf_in, cf_prime, transform = "x";
  auto* est = app.add_subcommand("estimate", "Spot-variance estimates from CF grids");
  est->add_option("--cf", cf_in, "CF grid CSV at tenor T")->required()->check(CLI::ExistingFile);
  est->add_option("--cf-prime", cf_prime, "CF grid CSV at the longer tenor T'")->check(CLI::ExistingFile);
  est->add_option("--transform", transform, "x, sqrt, log or logsqrt");
  est->add_option("-o,--out", out, "Estimator CSV (default stdout)");

  std::string model_file;
  auto* val = app.add_subcommand("validate", "Check a [model] table and print the validity report");
  val->add_option("config", model_file, "TOML file with a [model] table")->required()->check(CLI::ExistingFile);

  std::string fit_file, xcol, ycol;
  std::optional<double> min_slope;
  auto* fit = app.add_subcommand("fit", "Log-log slope of a residual column against a scale column");
  fit->add_option("csv", fit_file, "Input CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--x", xcol, "Scale column")->required();
  fit->add_option("--y", ycol, "Residual column")->required();
  fit->add_option("--min-slope", min_slope, "Fail (exit 2) when the slope is below this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kError;
  }

  try {
    if (*run) return cmd_run(config, out_dir, threads);
    if (*span) return cmd_span(sigma, T, x0, coverage, points, curve_in, u, curve_out, out);
    if (*est) return cmd_estimate(cf_in, cf_prime, transform, out);
    if (*val) return cmd_validate(model_file);
    if (*fit) return cmd_fit(fit_file, xcol, ycol, min_slope);
  } catch (const Error& e) {
    std::cerr << "cfx: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "cfx: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
