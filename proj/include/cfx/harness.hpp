#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfx/model.hpp"
#include "cfx/transform.hpp"

namespace cfx {

enum class ExperimentKind { oracle_levy, order_fit_eta, order_fit_increment, spanning_roundtrip, debias_study };
std::string_view to_string(ExperimentKind k);
/// Throws Error(ConfigError).
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::oracle_levy;
  ModelSpec model;

  struct Grid {
    double t = 1.0;
    double T = 0.1;
    double delta_ratio = 1.0 / 16.0;  // delta_n = delta_ratio * T
    double tau = 1.5;
    int i_max = 1;
    std::vector<double> u_grid{2.0};
    std::vector<double> T_list{0.4, 0.283, 0.2, 0.141, 0.1, 0.05};
    double u_check = 2.0;
    double T_check = 0.3;
  } grid;

  struct Mc {
    std::size_t n_paths = 100000;
    int steps_per_leg = 512;
    double path_dt = 1.0 / 1024;
    std::uint64_t seed = 20240601;
    int threads = 0;
    double sigma_floor = 1e-6;
    double max_floor_fraction = 0.25;
  } mc;

  struct Spanning {
    double coverage = 10.0;
    int points_per_sd = 50;
    double tail_tol = 1e-8;
  } spanning;

  TransformKind transform = TransformKind::x;
  std::map<std::string, double> thresholds;  // defaults filled per kind by parse

  double threshold(const std::string& key) const;
};

/// Default pass/fail thresholds.
std::map<std::string, double> default_thresholds();

/// Parses the TOML text. Unknown keys, empty or non-positive u-grids and
/// delta_n / T >= 0.25 for increment studies raise Error(ConfigError).
ExperimentConfig parse_config(std::string_view toml_text);
ExperimentConfig load_config(const std::filesystem::path& file);
/// The [model] table alone.
ModelSpec parse_model_toml(std::string_view toml_text);

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">", ">="
  double threshold = 0.0;
  bool pass = false;
};

Check make_check(std::string name, double value, std::string relation, double threshold);

struct RunResult {
  std::vector<Check> checks;
  std::vector<std::string> files;
  nlohmann::json manifest;
  bool pass() const;
};

/// Runs the experiment and writes manifest.json plus CSV files into out_dir.
RunResult run(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct SlopeFit {
  std::vector<double> log_scale;
  std::vector<double> log_residual;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::optional<double> threshold;
};

/// Least-squares slope of log residual on log scale. Throws
/// Error(InsufficientPoints) for fewer than 4 points or a scale span below 8x,
/// Error(DomainError) for non-positive values.
SlopeFit fit_order(const std::vector<double>& scale, const std::vector<double>& residual,
                   std::optional<double> threshold = std::nullopt);

}  // namespace cfx
