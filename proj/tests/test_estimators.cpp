#include <gtest/gtest.h>

#include <cmath>

#include "cfx/error.hpp"
#include "cfx/estimators.hpp"

using namespace cfx;

TEST(Estimators, SpotVarInvertsDefinition) {
  EXPECT_NEAR(spot_var(std::exp(-0.08), 2.0), 0.04, 1e-16);
  EXPECT_EQ(spot_var(std::polar(1.0, 0.3), 2.0), 0.0);
  for (double v : {0.0, 1e-4, 0.04, 0.3, 2.0}) {
    for (double u : {-3.0, 0.5, 1.0, 2.5}) {
      EXPECT_NEAR(spot_var(std::polar(std::exp(-0.5 * u * u * v), 0.7 * u), u), v, 1e-14 * std::max(1.0, v));
    }
  }
}

TEST(Estimators, SpotVarClampsAndRejects) {
  bool clamped = false;
  EXPECT_EQ(spot_var(1.001, 2.0, &clamped), 0.0);
  EXPECT_TRUE(clamped);
  spot_var(0.9, 2.0, &clamped);
  EXPECT_FALSE(clamped);
  EXPECT_THROW(spot_var(1e-13, 2.0), Error);
  EXPECT_THROW(spot_var(0.5, 0.0), Error);
}

TEST(Estimators, SpotVarMonotoneInModulus) {
  double prev = -1.0;
  for (double m = 0.99; m > 0.1; m -= 0.01) {
    const double v = spot_var(m, 2.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Estimators, DebiasAlgebra) {
  EXPECT_DOUBLE_EQ(spot_var_debiased(0.07, 0.07, 0.1, 1.5), 0.07);
  const double s2 = 0.04, b = 0.3, T = 0.1, tau = 1.5;
  EXPECT_NEAR(spot_var_debiased(s2 + b * T, s2 + b * tau * T, T, tau), s2, 1e-15);
  EXPECT_NEAR(spot_var_debiased(0.05, 0.06, 0.2, 2.0), 0.04, 1e-16);
  EXPECT_THROW(spot_var_debiased(0.05, 0.06, 0.2, 1.0), Error);
}

TEST(Estimators, TransformOrdering) {
  EXPECT_EQ(transform_estimate(0.04, TransformKind::x), 0.04);
  EXPECT_NEAR(transform_estimate(0.04, TransformKind::sqrt), 0.2, 1e-16);
  EXPECT_THROW(transform_estimate(0.0, TransformKind::log), Error);
  const double at_transform =
      transform_debiased(std::log(0.05), std::log(0.06), 0.1, 2.0);
  const double at_variance = std::log(spot_var_debiased(0.05, 0.06, 0.1, 2.0));
  EXPECT_NEAR(at_transform, 2.0 * std::log(0.05) - std::log(0.06), 1e-15);
  EXPECT_GT(std::abs(at_transform - at_variance), 1e-3);
}

TEST(Estimators, NodesAndIncrements) {
  const HFGrid g = make_hfgrid(1.0, 0.01, 0.16, 1.5, 3);
  // Spot variance path v_i plus a bias affine in the tenor.
  const double v[4] = {0.040, 0.043, 0.041, 0.045};
  const double b = 0.2;
  std::vector<std::complex<double>> cT, cTp;
  const double u = 2.0;
  for (int i = 0; i <= 3; ++i) {
    cT.push_back(std::exp(-0.5 * u * u * (v[i] + b * g.T_i(i))));
    cTp.push_back(std::exp(-0.5 * u * u * (v[i] + b * g.Tprime_i(i))));
  }
  const auto nodes = estimate_nodes(g, u, cT, cTp, TransformKind::x);
  ASSERT_EQ(nodes.size(), 4u);
  for (int i = 0; i <= 3; ++i) EXPECT_NEAR(*nodes[i].var_debiased, v[i], 1e-15);
  const auto inc = estimator_increments(nodes);
  ASSERT_EQ(inc.size(), 3u);
  for (int i = 1; i <= 3; ++i) {
    EXPECT_NEAR(*inc[i - 1].d_var_debiased, v[i - 1] - v[i], 1e-15);
    EXPECT_NEAR(inc[i - 1].d_var, v[i - 1] - v[i] - b * 0.01, 1e-14);
    EXPECT_EQ(inc[i - 1].T_prev, g.T_i(i - 1));
  }
  const auto flat = estimator_increments(estimate_nodes(g, u, std::vector<std::complex<double>>(4, 0.9), {}, TransformKind::log));
  for (const auto& d : flat) {
    EXPECT_EQ(d.d_var, 0.0);
    EXPECT_EQ(d.d_V, 0.0);
    EXPECT_FALSE(d.d_var_debiased.has_value());
  }
  EXPECT_THROW(estimate_nodes(g, u, std::vector<std::complex<double>>(3, 0.9), {}, TransformKind::x), Error);
  auto broken = nodes;
  broken[2].i = 5;
  EXPECT_THROW(estimator_increments(broken), Error);
}
