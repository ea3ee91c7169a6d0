#include "cfx/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>

#include "cfx/error.hpp"

namespace cfx {

using nlohmann::json;

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out_ << ',';
    const std::string& f = fields[k];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << "\r\n";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  const auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(Errc::ConfigError, "unterminated quoted CSV field");
  if (any || !row.empty() || !field.empty()) end_row();
  return rows;
}

CsvTable read_csv_table(std::istream& in) {
  auto rows = parse_csv(in);
  if (rows.empty()) throw Error(Errc::ConfigError, "empty CSV");
  CsvTable t;
  t.header = std::move(rows.front());
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != t.header.size()) {
      throw Error(Errc::ConfigError, "CSV row " + std::to_string(k) + " has the wrong number of fields");
    }
    t.rows.push_back(std::move(rows[k]));
  }
  return t;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw Error(Errc::ConfigError, "CSV column '" + name + "' missing");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& s = rows.at(row)[column(name)];
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ConfigError, "CSV field '" + s + "' in column " + name + " is not a number");
  }
}

void write_cfgrid_csv(std::ostream& out, const CFGrid& g) {
  CsvWriter w(out);
  w.row({"u", "T", "re", "im", "stderr", "n"});
  for (Eigen::Index j = 0; j < g.u.size(); ++j) {
    w.row({format_number(g.u[j]), format_number(g.T), format_number(g.value[j].real()),
           format_number(g.value[j].imag()), format_number(g.std_error.size() ? g.std_error[j] : 0.0),
           std::to_string(g.n_paths)});
  }
}

CFGrid read_cfgrid_csv(std::istream& in) {
  const CsvTable t = read_csv_table(in);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw Error(Errc::ConfigError, "CF grid has no rows");
  CFGrid g;
  g.u.resize(n);
  g.value.resize(n);
  g.std_error.resize(n);
  g.T = t.number(0, "T");
  g.n_paths = static_cast<std::size_t>(t.number(0, "n"));
  g.provenance = "csv";
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto r = static_cast<std::size_t>(j);
    g.u[j] = t.number(r, "u");
    g.value[j] = {t.number(r, "re"), t.number(r, "im")};
    g.std_error[j] = t.number(r, "stderr");
    if (t.number(r, "T") != g.T) throw Error(Errc::ConfigError, "CF grid mixes tenors");
  }
  return g;
}

void write_option_curve_csv(std::ostream& out, const OptionCurve& c) {
  CsvWriter w(out);
  w.row({"k", "price", "stderr", "wing"});
  for (Eigen::Index j = 0; j < c.strikes.size(); ++j) {
    w.row({format_number(c.strikes[j]), format_number(c.prices[j]),
           format_number(c.std_error.size() ? c.std_error[j] : 0.0), c.is_put(j) ? "put" : "call"});
  }
}

OptionCurve read_option_curve_csv(std::istream& in, double x_t, double T) {
  const CsvTable t = read_csv_table(in);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  OptionCurve c;
  c.x_t = x_t;
  c.T = T;
  c.strikes.resize(n);
  c.prices.resize(n);
  c.std_error = Eigen::ArrayXd::Zero(n);
  const bool has_se = std::find(t.header.begin(), t.header.end(), "stderr") != t.header.end();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto r = static_cast<std::size_t>(j);
    c.strikes[j] = t.number(r, "k");
    c.prices[j] = t.number(r, "price");
    if (has_se) c.std_error[j] = t.number(r, "stderr");
    if (j > 0 && !(c.strikes[j] > c.strikes[j - 1])) throw Error(Errc::ConfigError, "strikes must ascend");
    if (c.prices[j] < 0.0) throw Error(Errc::ConfigError, "negative option price");
  }
  c.source = (c.std_error > 0.0).any() ? CurveSource::mc : CurveSource::closed_form;
  return c;
}

void write_estimates_csv(std::ostream& out, const std::vector<NodeEstimate>& rows) {
  CsvWriter w(out);
  w.row({"i", "u", "T", "tau", "var", "var_debiased", "V_kind", "V", "flags"});
  for (const auto& e : rows) {
    std::string flags;
    for (const auto& f : e.flags) flags += (flags.empty() ? "" : ";") + f;
    w.row({std::to_string(e.i), format_number(e.u), format_number(e.T), format_number(e.tau),
           format_number(e.var), e.var_debiased ? format_number(*e.var_debiased) : "",
           std::string(to_string(e.kind)), format_number(e.V), flags});
  }
}

void write_expansion_csv(std::ostream& out, const std::vector<ExpansionReport>& reports) {
  CsvWriter w(out);
  w.row({"kind", "i", "u", "T", "delta_n", "transform", "debiased", "term", "re", "im", "status",
         "order_tags"});
  for (const auto& r : reports) {
    for (const auto& t : r.terms) {
      std::string tags;
      for (const auto& g : t.order_tags) tags += (tags.empty() ? "" : ";") + g;
      w.row({r.kind, std::to_string(r.i), format_number(r.u), format_number(r.T), format_number(r.delta_n),
             std::string(to_string(r.transform)), r.debiased ? "true" : "false", t.name,
             t.value ? format_number(t.value->real()) : "", t.value ? format_number(t.value->imag()) : "",
             std::string(to_string(t.status)), tags});
    }
  }
}

json to_json(const ValidityReport& r) {
  json integrals = json::array();
  for (const auto& c : r.integrals) {
    integrals.push_back({{"name", c.name}, {"value", c.finite ? json(c.value) : json(nullptr)}, {"finite", c.finite}});
  }
  return {{"integrals", integrals},
          {"integrability", r.assumption1_integrability},
          {"summable_jumps", r.assumption2_summable},
          {"intensity_nonnegative", r.intensity_nonnegative},
          {"special_semimartingale", r.special_semimartingale},
          {"all_pass", r.all_pass()},
          {"not_checked", r.not_checked}};
}

json to_json(const ExpansionReport& r) {
  json terms = json::array();
  for (const auto& t : r.terms) {
    json j = {{"name", t.name}, {"status", std::string(to_string(t.status))}, {"order_tags", t.order_tags}};
    j["value"] = t.value ? json{{"re", t.value->real()}, {"im", t.value->imag()}} : json(nullptr);
    terms.push_back(std::move(j));
  }
  const cplx total = r.modeled_total();
  return {{"kind", r.kind},         {"i", r.i},
          {"u", r.u},               {"T", r.T},
          {"delta_n", r.delta_n},   {"tau", r.tau},
          {"transform", std::string(to_string(r.transform))},
          {"debiased", r.debiased}, {"terms", terms},
          {"modeled_total", {{"re", total.real()}, {"im", total.imag()}}}};
}

json to_json(const ModelSpec& s) {
  const auto& l = s.second_layer;
  const auto& j = s.jumps;
  json marks = std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PointMass>) {
          return {{"kind", "point_mass"}, {"size", m.size}, {"weight", m.weight}};
        } else if constexpr (std::is_same_v<M, DoubleExponential>) {
          return {{"kind", "double_exponential"}, {"eta_up", m.eta_up}, {"eta_down", m.eta_down}, {"p_up", m.p_up}};
        } else if constexpr (std::is_same_v<M, TemperedStable>) {
          return {{"kind", "tempered_stable"}, {"alpha", m.alpha}, {"c", m.c}, {"tempering", m.tempering}};
        } else {
          return {{"kind", "none"}};
        }
      },
      j.marks);
  return {{"x0", s.x0},
          {"drift_alpha", s.drift_alpha},
          {"vol_sigma0", s.vol_sigma0},
          {"vol_of_vol_ss", s.vol_of_vol_ss},
          {"vol_of_vol_perp", s.vol_of_vol_perp},
          {"activity_exponent_r", s.activity_exponent_r},
          {"hidden_layers", s.hidden_layers},
          {"second_layer",
           {{"sigma_drift", l.sigma_drift}, {"sigma_kappa", l.sigma_kappa}, {"sigma_theta", l.sigma_theta},
            {"ss_drift", l.ss_drift}, {"ss_vol", l.ss_vol}, {"perp_drift", l.perp_drift},
            {"perp_vol", l.perp_vol}}},
          {"jumps",
           {{"marks", marks},
            {"gamma_scale0", j.gamma_scale0},
            {"gamma_drift", j.gamma_drift},
            {"gamma_vol", j.gamma_vol},
            {"gamma_jump", j.gamma_jump},
            {"gamma_sigma_shape", {j.gamma_sigma_shape.a0, j.gamma_sigma_shape.a1}},
            {"gamma_sigma_scale0", j.gamma_sigma_scale0},
            {"gamma_sigma_drift", j.gamma_sigma_drift},
            {"gamma_sigma_vol", j.gamma_sigma_vol},
            {"intensity0", j.intensity0},
            {"intensity_kappa", j.intensity_kappa},
            {"intensity_theta", j.intensity_theta},
            {"intensity_vol", j.intensity_vol},
            {"intensity_excitation", {j.intensity_excitation.b0, j.intensity_excitation.b1}}}}};
}

json to_json(const CFGrid& g) {
  json rows = json::array();
  for (Eigen::Index k = 0; k < g.u.size(); ++k) {
    rows.push_back({{"u", g.u[k]},
                    {"re", g.value[k].real()},
                    {"im", g.value[k].imag()},
                    {"stderr", g.std_error.size() ? g.std_error[k] : 0.0}});
  }
  json j = {{"T", g.T}, {"n_paths", g.n_paths}, {"provenance", g.provenance}, {"values", rows}};
  if (g.T_prime) j["T_prime"] = *g.T_prime;
  return j;
}

std::string model_hash(const ModelSpec& s) {
  const std::string text = to_json(s).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace cfx
