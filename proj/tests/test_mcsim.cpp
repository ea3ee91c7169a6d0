#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cfx/error.hpp"
#include "cfx/expansion.hpp"
#include "cfx/mcsim.hpp"
#include "cfx/rng.hpp"
#include "oracles.hpp"

using namespace cfx;

namespace {

Eigen::ArrayXd small_grid() { return Eigen::ArrayXd::LinSpaced(4, 0.5, 2.0); }

void expect_within_se(const CFGrid& g, const Eigen::ArrayXcd& exact, double k, double floor = 0.0) {
  for (Eigen::Index j = 0; j < g.u.size(); ++j) {
    const double err = std::abs(g.value[j] - exact[j]);
    EXPECT_LT(err, k * g.std_error[j] + floor) << "u=" << g.u[j] << " est=" << g.value[j] << " exact=" << exact[j];
  }
}

Eigen::ArrayXcd theta_on(const Model& m, const ModelState& s, double T, const Eigen::ArrayXd& u) {
  Eigen::ArrayXcd out(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) out[j] = theta_factor(m, s, T, make_freq(u[j], T));
  return out;
}

}  // namespace

TEST(Rng, PhiloxKnownAnswer) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Rng, StreamsAreDistinct) {
  PathRng a(7, Stream::Brownian, 3), b(7, Stream::Jumps, 3), c(7, Stream::Brownian, 4);
  const auto x = a(), y = b(), z = c();
  EXPECT_NE(x, y);
  EXPECT_NE(x, z);
}

TEST(McSim, ZeroVolatilityIsDeterministicDrift) {
  const Model m = build_model(black_scholes_spec(0.0, 0.3));
  SimOptions opt;
  opt.sigma_floor = 0.0;
  const Path p = simulate_path(m, 1.0, 1.0 / 256, 11, opt);
  ASSERT_EQ(p.size(), 257u);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p.x[k], 0.3 * p.times[k], 1e-12);
  EXPECT_TRUE(p.events.empty());
}

TEST(McSim, BrownianIncrementsAreNormal) {
  const Model m = build_model(black_scholes_spec(0.2));
  const double dt = 1.0 / 1024;
  const Path p = simulate_path(m, 4.0, dt, 5);
  std::vector<double> z;
  for (std::size_t k = 1; k < p.size(); ++k) z.push_back((p.x[k] - p.x[k - 1]) / (0.2 * std::sqrt(dt)));
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double f = oracle::norm_cdf(z[k]);
    d = std::max({d, std::abs(f - k / n), std::abs(f - (k + 1) / n)});
  }
  EXPECT_LT(d, 1.63 / std::sqrt(n));  // KS at the 1% level
}

TEST(McSim, PoissonEventCount) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = PointMass{0.05, 2.0};
  s.jumps.intensity0 = 5.0;
  const Model m = build_model(s);
  const Path p = simulate_path(m, 100.0, 0.01, 9);
  const double mean = 100.0 * 5.0 * 2.0;
  EXPECT_LT(std::abs(static_cast<double>(p.events.size()) - mean), 4.0 * std::sqrt(mean));
  for (const auto& e : p.events) EXPECT_DOUBLE_EQ(e.dx, 0.05);
}

TEST(McSim, ThinningMatchesIntegratedIntensity) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = DoubleExponential{10.0, 10.0, 0.5};
  s.jumps.intensity0 = 3.0;
  s.jumps.intensity_kappa = 4.0;
  s.jumps.intensity_theta = 3.0;
  s.jumps.intensity_vol = 0.5;
  s.jumps.intensity_excitation = {0.5, 5.0};
  const Model m = build_model(s);
  const Path p = simulate_path(m, 200.0, 0.005, 21);
  double compensator = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) compensator += p.intensity_scale[k] * p.dt;
  const double n = static_cast<double>(p.events.size());
  EXPECT_GT(n, 100.0);
  // The intensity moves within a step at accepted marks, so the left-point sum
  // is only a proxy; allow a few percent on top of the counting noise.
  EXPECT_LT(std::abs(n - compensator), 4.0 * std::sqrt(compensator) + 0.03 * compensator);
}

TEST(McSim, SinglePathHasUnitModulus) {
  const Model m = build_model(black_scholes_spec(0.2));
  const CFGrid g = conditional_cf_mc(m, m.initial_state(), 0.1, small_grid(), 1, 3);
  for (Eigen::Index j = 0; j < g.u.size(); ++j) EXPECT_NEAR(std::abs(g.value[j]), 1.0, 1e-14);
  EXPECT_EQ(g.n_paths, 1u);
}

TEST(McSim, BlackScholesCF) {
  const Model m = build_model(black_scholes_spec(0.2));
  const Eigen::ArrayXd u = small_grid();
  SimOptions opt;
  opt.steps_per_leg = 16;
  const CFGrid g = conditional_cf_mc(m, m.initial_state(), 0.1, u, 40000, 17, opt);
  const Eigen::ArrayXcd exact = (-0.5 * u.square() * 0.04).exp().cast<cplx>();
  expect_within_se(g, exact, 4.0);
  EXPECT_EQ(g.provenance, "mc");
}

TEST(McSim, CompoundPoissonMatchesTheta) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = PointMass{0.1, 1.0};
  s.jumps.intensity0 = 8.0;
  const Model m = build_model(s);
  SimOptions opt;
  opt.steps_per_leg = 32;
  const Eigen::ArrayXd u = small_grid();
  const CFGrid g = conditional_cf_mc(m, m.initial_state(), 0.1, u, 40000, 23, opt);
  expect_within_se(g, theta_on(m, m.initial_state(), 0.1, u), 4.0);
}

TEST(McSim, DoubleExponentialMatchesTheta) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = DoubleExponential{8.0, 6.0, 0.4};
  s.jumps.intensity0 = 5.0;
  const Model m = build_model(s);
  SimOptions opt;
  opt.steps_per_leg = 32;
  const Eigen::ArrayXd u = small_grid();
  const CFGrid g = conditional_cf_mc(m, m.initial_state(), 0.1, u, 40000, 29, opt);
  expect_within_se(g, theta_on(m, m.initial_state(), 0.1, u), 4.0);
}

TEST(McSim, TemperedStableMatchesTheta) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = TemperedStable{1.5, 0.1, 5.0};
  s.activity_exponent_r = 1.7;
  const Model m = build_model(s);
  SimOptions opt;
  opt.steps_per_leg = 32;
  const Eigen::ArrayXd u = small_grid();
  const CFGrid g = conditional_cf_mc(m, m.initial_state(), 0.1, u, 40000, 31, opt);
  // Small marks are replaced by a Gaussian; the fourth-cumulant error is far
  // below the MC noise here, a 1e-4 floor absorbs it.
  expect_within_se(g, theta_on(m, m.initial_state(), 0.1, u), 4.0, 1e-4);
}

TEST(McSim, IncrementsAreMartingale) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = DoubleExponential{6.0, 9.0, 0.7};
  s.jumps.intensity0 = 4.0;
  s.jumps.gamma_vol = 0.2;
  s.jumps.gamma_jump = 0.5;
  s.jumps.gamma_sigma_shape = {0.02, 0.3};
  s.jumps.intensity_excitation = {0.5, 2.0};
  s.jumps.intensity_kappa = 2.0;
  s.jumps.intensity_theta = 4.0;
  const Model m = build_model(s);
  SimOptions opt;
  opt.steps_per_leg = 64;
  const std::size_t n = 40000;
  const Eigen::ArrayXd x = terminal_samples(m, m.initial_state(), 0.25, n, 37, opt);
  const double mean = x.mean();
  const double se = std::sqrt((x - mean).square().sum() / (n - 1) / n);
  EXPECT_LT(std::abs(mean), 4.0 * se);
}

TEST(McSim, ReproducibleAndThreadIndependent) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = DoubleExponential{};
  s.jumps.intensity0 = 3.0;
  const Model m = build_model(s);
  SimOptions a, b;
  a.steps_per_leg = b.steps_per_leg = 8;
  a.threads = 1;
  b.threads = 4;
  a.chunk_paths = b.chunk_paths = 1000;
  const CFGrid g1 = conditional_cf_mc(m, m.initial_state(), 0.1, small_grid(), 9000, 41, a);
  const CFGrid g2 = conditional_cf_mc(m, m.initial_state(), 0.1, small_grid(), 9000, 41, b);
  for (Eigen::Index j = 0; j < g1.u.size(); ++j) {
    EXPECT_EQ(g1.value[j], g2.value[j]);
    EXPECT_EQ(g1.std_error[j], g2.std_error[j]);
  }
  const Path p1 = simulate_path(m, 1.0, 0.01, 5), p2 = simulate_path(m, 1.0, 0.01, 5);
  EXPECT_EQ(p1.x, p2.x);
  const Path p3 = simulate_path(m, 1.0, 0.01, 6);
  EXPECT_NE(p1.x, p3.x);
}

TEST(McSim, CommonRandomNumbersReduceVariance) {
  const Model m = build_model(black_scholes_spec(0.2));
  ModelState a = m.initial_state(), b = a;
  b.sigma = 0.21;
  SimOptions opt;
  opt.steps_per_leg = 16;
  const PairedCF pc = paired_cf_mc(m, a, 0.1, b, 0.1 + 1.0 / 4096, small_grid(), 20000, 43, opt);
  for (Eigen::Index j = 0; j < pc.diff.size(); ++j) {
    const double indep = std::hypot(pc.a.std_error[j], pc.b.std_error[j]);
    EXPECT_LT(pc.diff_std_error[j], 0.5 * indep);
    EXPECT_EQ(pc.diff[j], pc.a.value[j] - pc.b.value[j]);
  }
}

TEST(McSim, FrozenStateReadsGrid) {
  ModelSpec s = black_scholes_spec(0.2);
  s.vol_of_vol_ss = 0.3;
  const Model m = build_model(s);
  const Path p = simulate_path(m, 1.0, 0.01, 3);
  const ModelState f = frozen_state(m, p, 0.5);
  EXPECT_EQ(f.sigma, p.sigma[50]);
  EXPECT_EQ(f.x, p.x[50]);
  EXPECT_EQ(frozen_state(m, p, 0.505).sigma, p.sigma[50]);
  EXPECT_EQ(frozen_state(m, p, 1.0).sigma, p.sigma.back());
  EXPECT_NE(p.sigma[50], p.sigma[0]);
  EXPECT_THROW(frozen_state(m, p, 1.5), Error);
  EXPECT_THROW(frozen_state(m, p, -0.1), Error);
}

TEST(McSim, UnstableSchemeIsReported) {
  ModelSpec s = black_scholes_spec(0.01);
  s.second_layer.sigma_drift = -50.0;
  const Model m = build_model(s);
  try {
    simulate_path(m, 1.0, 0.01, 1);
    FAIL() << "expected UnstableScheme";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnstableScheme);
  }
}

TEST(McSim, IncrementCFNeedsCoveringPath) {
  const Model m = build_model(black_scholes_spec(0.2));
  const Path p = simulate_path(m, 0.5, 0.01, 3);
  SimOptions opt;
  opt.steps_per_leg = 8;
  const HFGrid bad = make_hfgrid(0.8, 0.01, 0.1, 1.5, 2);
  EXPECT_THROW(increment_cf_mc(m, p, bad, small_grid(), 10, 1, opt), Error);
  const HFGrid ok = make_hfgrid(0.4, 0.01, 0.1, 1.5, 2);
  const auto inc = increment_cf_mc(m, p, ok, small_grid(), 100, 1, opt);
  ASSERT_EQ(inc.size(), 2u);
  EXPECT_EQ(inc[1].i, 2);
  EXPECT_NEAR(inc[0].pair.a.T, 0.1, 1e-15);
  EXPECT_NEAR(inc[1].pair.a.T, 0.11, 1e-15);
  EXPECT_NEAR(inc[1].pair.b.T, 0.12, 1e-15);
}

TEST(McSim, RejectsBadArguments) {
  const Model m = build_model(black_scholes_spec(0.2));
  EXPECT_THROW(conditional_cf_mc(m, m.initial_state(), 0.1, small_grid(), 0, 1), Error);
  EXPECT_THROW(conditional_cf_mc(m, m.initial_state(), 0.0, small_grid(), 10, 1), Error);
  EXPECT_THROW(simulate_path(m, 1.0, 0.0, 1), Error);
}

TEST(McSim, ExponentialMartingaleUnderCompensatedDrift) {
  const Model m = build_model(black_scholes_spec(0.2, -0.02));
  SimOptions opt;
  opt.steps_per_leg = 16;
  const std::size_t n = 40000;
  const Eigen::ArrayXd x = terminal_samples(m, m.initial_state(), 0.5, n, 53, opt);
  const Eigen::ArrayXd e = x.exp();
  const double mean = e.mean();
  const double se = std::sqrt((e - mean).square().sum() / (n - 1) / n);
  EXPECT_LT(std::abs(mean - 1.0), 4.0 * se);
}

TEST(McSim, ModulusNeverExceedsOne) {
  ModelSpec s = black_scholes_spec(0.3);
  s.jumps.marks = DoubleExponential{5.0, 5.0, 0.5};
  const Model m = build_model(s);
  SimOptions opt;
  opt.steps_per_leg = 8;
  const CFGrid g = conditional_cf_mc(m, m.initial_state(), 0.05, default_u_grid(), 5000, 59, opt);
  ASSERT_EQ(g.u.size(), 11);
  for (Eigen::Index j = 0; j < g.u.size(); ++j) EXPECT_LE(std::abs(g.value[j]), 1.0 + 1e-12);
}
