#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cfx/cfgrid.hpp"
#include "cfx/expansion.hpp"
#include "cfx/model.hpp"

namespace cfx {

struct SimOptions {
  int steps_per_leg = 512;          // forward legs use dt = T / steps_per_leg
  double sigma_floor = 1e-6;        // sigma is reflected at this level
  double max_floor_fraction = 0.25; // UnstableScheme above this share of reflected steps
  double small_jump_eps = 0.01;     // tempered-stable marks below this become a Gaussian
  int threads = 0;                  // 0 = hardware concurrency
  std::size_t chunk_paths = 4096;   // reduction granularity (fixed, so results do not depend on threads)
};

struct JumpEvent {
  double time = 0.0;
  double z = 0.0;
  double dx = 0.0;
  double dsigma = 0.0;
};

/// One simulated trajectory on a uniform grid. Index k holds the state at
/// times[k], after every jump in (times[k-1], times[k]].
struct Path {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> x, sigma, sigma_sigma, sigma_perp;
  std::vector<double> gamma_scale, gamma_sigma_scale, intensity_scale;
  std::vector<JumpEvent> events;
  std::size_t sigma_reflections = 0;
  std::size_t intensity_reflections = 0;

  std::size_t size() const { return times.size(); }
};

/// Euler scheme with thinned jumps. Reproducible for a fixed seed.
/// Throws Error(UnstableScheme) when the sigma floor is hit too often.
Path simulate_path(const Model& model, double horizon, double dt, std::uint64_t seed,
                   const SimOptions& opt = {});

/// Stored coefficient values at the last grid point <= t.
/// Throws Error(OutOfRange) outside the path horizon.
ModelState frozen_state(const Model& model, const Path& path, double t);

/// Mean of exp(i u_T (x_{t+T} - x_t)) over forward paths started at `state`.
CFGrid conditional_cf_mc(const Model& model, const ModelState& state, double T,
                         const Eigen::ArrayXd& u_grid, std::size_t n_paths, std::uint64_t seed,
                         const SimOptions& opt = {});

/// Two conditional CFs estimated on common random numbers: path p of leg a
/// and path p of leg b use the same Brownian and jump substreams and the
/// same number of steps.
struct PairedCF {
  CFGrid a;
  CFGrid b;
  Eigen::ArrayXcd diff;       // a - b
  Eigen::ArrayXd diff_std_error;
};

PairedCF paired_cf_mc(const Model& model, const ModelState& state_a, double T_a,
                      const ModelState& state_b, double T_b, const Eigen::ArrayXd& u_grid,
                      std::size_t n_paths, std::uint64_t seed, const SimOptions& opt = {});

struct IncrementCF {
  int i = 0;
  PairedCF pair;  // a: (t_{i-1}, T_{i-1}), b: (t_i, T_i)
};

/// Nested MC increments of the conditional CF along an HFGrid, frozen at the
/// base path's states. Throws Error(GridError) when the path does not cover
/// [t - i_max delta_n, t].
std::vector<IncrementCF> increment_cf_mc(const Model& model, const Path& base_path,
                                         const HFGrid& grid, const Eigen::ArrayXd& u_grid,
                                         std::size_t n_paths, std::uint64_t seed,
                                         const SimOptions& opt = {});

/// Terminal log prices x_{t+T} of n forward paths started at `state`, in
/// path-index order.
Eigen::ArrayXd terminal_samples(const Model& model, const ModelState& state, double T,
                                std::size_t n_paths, std::uint64_t seed, const SimOptions& opt = {});

}  // namespace cfx
