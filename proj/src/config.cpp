#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml++/toml.hpp>

#include "cfx/error.hpp"
#include "cfx/harness.hpp"

namespace cfx {

namespace {

// Reads keys from one table and remembers which were consumed so that
// misspelled keys are reported instead of silently ignored.
class Section {
 public:
  Section(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  bool present() const { return table_ != nullptr; }

  double number(const std::string& key, double fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value<double>()) return *v;
    fail(key, "expected a number");
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    fail(key, "expected an integer");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->value<std::string>()) return *v;
    fail(key, "expected a string");
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    const toml::array* arr = n->as_array();
    if (!arr) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      auto v = e.value<double>();
      if (!v) fail(key, "expected an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  Section sub(const std::string& key) {
    const toml::node* n = get(key);
    if (!n) return {nullptr, path_ + "." + key};
    if (!n->is_table()) fail(key, "expected a table");
    return {n->as_table(), path_ + "." + key};
  }

  /// All remaining keys, for free-form tables.
  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    if (table_) {
      for (const auto& [k, v] : *table_) out.emplace_back(k.str());
    }
    return out;
  }

  void mark_all_used() {
    for (const auto& k : keys()) used_.insert(k);
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(std::string(k.str()))) {
        throw Error(Errc::ConfigError, "unknown key '" + path_ + "." + std::string(k.str()) + "'");
      }
    }
  }

 private:
  const toml::node* get(const std::string& key) {
    if (!table_) return nullptr;
    used_.insert(key);
    return table_->get(key);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(Errc::ConfigError, path_ + "." + key + ": " + what);
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> used_;
};

toml::table parse_toml(std::string_view text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw Error(Errc::ConfigError, os.str());
  }
}

std::pair<double, double> pair_of(Section& s, const std::string& key, std::pair<double, double> fallback) {
  const auto v = s.numbers(key, {fallback.first, fallback.second});
  if (v.size() != 2) throw Error(Errc::ConfigError, key + " needs two numbers");
  return {v[0], v[1]};
}

MarkMeasure read_marks(Section& j) {
  const std::string kind = j.text("marks", "none");
  if (kind == "none") return std::monostate{};
  if (kind == "point_mass") {
    PointMass m;
    m.size = j.number("size", m.size);
    m.weight = j.number("weight", m.weight);
    return m;
  }
  if (kind == "double_exponential") {
    DoubleExponential m;
    m.eta_up = j.number("eta_up", m.eta_up);
    m.eta_down = j.number("eta_down", m.eta_down);
    m.p_up = j.number("p_up", m.p_up);
    return m;
  }
  if (kind == "tempered_stable") {
    TemperedStable m;
    m.alpha = j.number("alpha", m.alpha);
    m.c = j.number("c", m.c);
    m.tempering = j.number("tempering", m.tempering);
    return m;
  }
  throw Error(Errc::ConfigError, "unknown mark family '" + kind + "'");
}

ModelSpec read_model(Section m) {
  if (!m.present()) throw Error(Errc::ConfigError, "missing [model] table");
  ModelSpec s;
  s.x0 = m.number("x0", s.x0);
  s.drift_alpha = m.number("drift_alpha", s.drift_alpha);
  s.vol_sigma0 = m.number("vol_sigma0", s.vol_sigma0);
  s.vol_of_vol_ss = m.number("vol_of_vol_ss", s.vol_of_vol_ss);
  s.vol_of_vol_perp = m.number("vol_of_vol_perp", s.vol_of_vol_perp);
  s.activity_exponent_r = m.number("activity_exponent_r", s.activity_exponent_r);
  s.hidden_layers = static_cast<int>(m.integer("hidden_layers", s.hidden_layers));

  Section l = m.sub("second_layer");
  auto& sl = s.second_layer;
  sl.sigma_drift = l.number("sigma_drift", sl.sigma_drift);
  sl.sigma_kappa = l.number("sigma_kappa", sl.sigma_kappa);
  sl.sigma_theta = l.number("sigma_theta", sl.sigma_theta);
  sl.ss_drift = l.number("ss_drift", sl.ss_drift);
  sl.ss_vol = l.number("ss_vol", sl.ss_vol);
  sl.perp_drift = l.number("perp_drift", sl.perp_drift);
  sl.perp_vol = l.number("perp_vol", sl.perp_vol);
  l.finish();

  Section j = m.sub("jumps");
  auto& js = s.jumps;
  js.marks = read_marks(j);
  js.gamma_scale0 = j.number("gamma_scale0", js.gamma_scale0);
  js.gamma_drift = j.number("gamma_drift", js.gamma_drift);
  js.gamma_vol = j.number("gamma_vol", js.gamma_vol);
  js.gamma_jump = j.number("gamma_jump", js.gamma_jump);
  const auto shape = pair_of(j, "gamma_sigma_shape", {0.0, 0.0});
  js.gamma_sigma_shape = {shape.first, shape.second};
  js.gamma_sigma_scale0 = j.number("gamma_sigma_scale0", js.gamma_sigma_scale0);
  js.gamma_sigma_drift = j.number("gamma_sigma_drift", js.gamma_sigma_drift);
  js.gamma_sigma_vol = j.number("gamma_sigma_vol", js.gamma_sigma_vol);
  js.intensity0 = j.number("intensity0", js.intensity0);
  js.intensity_kappa = j.number("intensity_kappa", js.intensity_kappa);
  js.intensity_theta = j.number("intensity_theta", js.intensity_theta);
  js.intensity_vol = j.number("intensity_vol", js.intensity_vol);
  const auto ex = pair_of(j, "intensity_excitation", {0.0, 0.0});
  js.intensity_excitation = {ex.first, ex.second};
  j.finish();
  m.finish();
  return s;
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::oracle_levy: return "oracle_levy";
    case ExperimentKind::order_fit_eta: return "order_fit_eta";
    case ExperimentKind::order_fit_increment: return "order_fit_increment";
    case ExperimentKind::spanning_roundtrip: return "spanning_roundtrip";
    case ExperimentKind::debias_study: return "debias_study";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::oracle_levy, ExperimentKind::order_fit_eta, ExperimentKind::order_fit_increment,
                 ExperimentKind::spanning_roundtrip, ExperimentKind::debias_study}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::ConfigError, "unknown experiment kind '" + std::string(name) + "'");
}

std::map<std::string, double> default_thresholds() {
  return {
      {"oracle_abs_err", 1e-8},
      {"eta_slope_gain", 0.3},
      {"eta_reduction", 0.5},
      {"eta_noise_sds", 4.0},
      {"increment_final_ratio", 0.1},
      {"span_cf_err", 1e-3},
      {"span_var_err", 1e-4},
      {"span_halving_factor", 3.0},
      {"debias_absent", 1e-12},
      {"debias_match_rel", 1e-8},
      {"synthetic_debias_err", 1e-14},
  };
}

double ExperimentConfig::threshold(const std::string& key) const {
  const auto it = thresholds.find(key);
  if (it == thresholds.end()) throw Error(Errc::ConfigError, "no threshold '" + key + "'");
  return it->second;
}

ModelSpec parse_model_toml(std::string_view toml_text) {
  const toml::table root = parse_toml(toml_text);
  Section top(&root, "");
  Section m = top.sub("model");
  top.mark_all_used();
  return read_model(std::move(m));
}

ExperimentConfig parse_config(std::string_view toml_text) {
  const toml::table root = parse_toml(toml_text);
  Section top(&root, "");
  ExperimentConfig c;

  Section e = top.sub("experiment");
  if (!e.present()) throw Error(Errc::ConfigError, "missing [experiment] table");
  c.kind = parse_experiment_kind(e.text("kind", ""));
  c.name = e.text("name", std::string(to_string(c.kind)));
  c.transform = parse_transform(e.text("transform", "x"));
  e.finish();

  c.model = read_model(top.sub("model"));

  Section g = top.sub("grid");
  c.grid.t = g.number("t", c.grid.t);
  c.grid.T = g.number("T", c.grid.T);
  c.grid.delta_ratio = g.number("delta_ratio", c.grid.delta_ratio);
  c.grid.tau = g.number("tau", c.grid.tau);
  c.grid.i_max = static_cast<int>(g.integer("i_max", c.grid.i_max));
  c.grid.u_grid = g.numbers("u_grid", c.grid.u_grid);
  c.grid.T_list = g.numbers("T_list", c.grid.T_list);
  c.grid.u_check = g.number("u_check", c.grid.u_check);
  c.grid.T_check = g.number("T_check", c.grid.T_check);
  g.finish();

  Section mc = top.sub("mc");
  const auto n_paths = mc.integer("n_paths", static_cast<std::int64_t>(c.mc.n_paths));
  if (n_paths < 1) throw Error(Errc::ConfigError, "mc.n_paths must be >= 1");
  c.mc.n_paths = static_cast<std::size_t>(n_paths);
  c.mc.steps_per_leg = static_cast<int>(mc.integer("steps_per_leg", c.mc.steps_per_leg));
  c.mc.path_dt = mc.number("path_dt", c.mc.path_dt);
  const auto seed = mc.integer("seed", static_cast<std::int64_t>(c.mc.seed));
  if (seed < 0) throw Error(Errc::ConfigError, "mc.seed must be >= 0");
  c.mc.seed = static_cast<std::uint64_t>(seed);
  c.mc.threads = static_cast<int>(mc.integer("threads", c.mc.threads));
  c.mc.sigma_floor = mc.number("sigma_floor", c.mc.sigma_floor);
  c.mc.max_floor_fraction = mc.number("max_floor_fraction", c.mc.max_floor_fraction);
  mc.finish();
  if (c.mc.steps_per_leg < 1 || !(c.mc.path_dt > 0.0)) {
    throw Error(Errc::ConfigError, "mc.steps_per_leg and mc.path_dt must be positive");
  }

  Section sp = top.sub("spanning");
  c.spanning.coverage = sp.number("coverage", c.spanning.coverage);
  c.spanning.points_per_sd = static_cast<int>(sp.integer("points_per_sd", c.spanning.points_per_sd));
  c.spanning.tail_tol = sp.number("tail_tol", c.spanning.tail_tol);
  sp.finish();

  c.thresholds = default_thresholds();
  Section th = top.sub("thresholds");
  for (const auto& key : th.keys()) {
    if (!c.thresholds.count(key)) throw Error(Errc::ConfigError, "unknown threshold '" + key + "'");
    c.thresholds[key] = th.number(key, 0.0);
  }
  th.finish();
  top.finish();

  if (c.grid.u_grid.empty()) throw Error(Errc::ConfigError, "grid.u_grid is empty");
  for (double u : c.grid.u_grid) {
    if (!(u > 0.0) || !std::isfinite(u)) throw Error(Errc::ConfigError, "grid.u_grid values must be positive");
  }
  for (double T : c.grid.T_list) {
    if (!(T > 0.0)) throw Error(Errc::ConfigError, "grid.T_list values must be positive");
  }
  if (!(c.grid.T > 0.0) || !(c.grid.tau > 1.0) || c.grid.i_max < 1 || !(c.grid.delta_ratio > 0.0)) {
    throw Error(Errc::ConfigError, "grid needs T > 0, tau > 1, i_max >= 1 and delta_ratio > 0");
  }
  const bool increments = c.kind == ExperimentKind::order_fit_increment || c.kind == ExperimentKind::debias_study;
  if (increments && c.grid.delta_ratio >= 0.25) {
    throw Error(Errc::ConfigError, "increment experiments need delta_n / T < 0.25");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::ConfigError, "cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace cfx
