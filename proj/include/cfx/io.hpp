#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfx/cfgrid.hpp"
#include "cfx/estimators.hpp"
#include "cfx/expansion.hpp"
#include "cfx/model.hpp"
#include "cfx/spanning.hpp"

namespace cfx {

/// RFC-4180 writer: CRLF line ends, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

/// Shortest text that reads back to the same double.
std::string format_number(double v);

/// Parses RFC-4180 text (quoted fields, embedded quotes, CRLF or LF).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

/// Rows as maps keyed by the header. Throws Error(ConfigError) on missing
/// columns or ragged rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};
CsvTable read_csv_table(std::istream& in);

void write_cfgrid_csv(std::ostream& out, const CFGrid& g);
CFGrid read_cfgrid_csv(std::istream& in);
void write_option_curve_csv(std::ostream& out, const OptionCurve& c);
OptionCurve read_option_curve_csv(std::istream& in, double x_t, double T);
void write_estimates_csv(std::ostream& out, const std::vector<NodeEstimate>& rows);
void write_expansion_csv(std::ostream& out, const std::vector<ExpansionReport>& reports);

nlohmann::json to_json(const ValidityReport& r);
nlohmann::json to_json(const ExpansionReport& r);
nlohmann::json to_json(const ModelSpec& s);
nlohmann::json to_json(const CFGrid& g);

/// 64-bit FNV-1a of the canonical JSON dump of the spec, as 16 hex digits.
std::string model_hash(const ModelSpec& s);

}  // namespace cfx
