#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <string>

namespace cfx {

/// Conditional characteristic function values on a u-grid at tenor T.
struct CFGrid {
  Eigen::ArrayXd u;
  double T = 0.0;
  std::optional<double> T_prime;
  Eigen::ArrayXcd value;
  Eigen::ArrayXd std_error;  // zero for closed-form values
  std::size_t n_paths = 0;   // 0 when not Monte Carlo
  std::string provenance;    // "mc", "spanning", "expansion", ...
};

/// Default compact u-grid: 11 equally spaced points on [0.5, 3].
Eigen::ArrayXd default_u_grid();

}  // namespace cfx
