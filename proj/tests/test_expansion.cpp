#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cfx/error.hpp"
#include "cfx/expansion.hpp"
#include "oracles.hpp"

using namespace cfx;

namespace {

constexpr cplx kI{0.0, 1.0};

Model bs(double sigma, double alpha = 0.0, double ss = 0.0) {
  ModelSpec s = black_scholes_spec(sigma, alpha);
  s.vol_of_vol_ss = ss;
  return build_model(s);
}

Model levy_double_exponential(double alpha = 0.0) {
  ModelSpec s = black_scholes_spec(0.2, alpha);
  s.jumps.marks = DoubleExponential{10.0, 10.0, 0.5};
  return build_model(s);
}

// Finite-activity model whose gamma^sigma scale moves while gamma stays z.
Model moving_gamma_sigma_model() {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = DoubleExponential{10.0, 8.0, 0.4};
  s.jumps.gamma_sigma_shape = {0.02, 0.3};
  s.jumps.gamma_sigma_drift = 0.5;
  s.jumps.intensity0 = 1.5;
  return build_model(s);
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(Expansion, GridNodes) {
  const HFGrid g = make_hfgrid(1.0, 0.01, 0.2, 1.5, 4);
  EXPECT_DOUBLE_EQ(g.t_i(3), 0.97);
  EXPECT_DOUBLE_EQ(g.T_i(3), 0.23);
  EXPECT_DOUBLE_EQ(g.Tprime_i(2), 0.32);
  EXPECT_THROW(make_hfgrid(1.0, 0.3, 0.2, 1.5, 4), Error);
  EXPECT_THROW(make_hfgrid(1.0, 0.01, 0.2, 1.0, 4), Error);
}

TEST(Expansion, ThetaBlackScholesHandValue) {
  const Model m = bs(0.2);
  for (double T : {0.05, 0.25, 1.0}) {
    const cplx th = theta_factor(m, m.initial_state(), T, make_freq(1.0, T));
    EXPECT_NEAR(th.real(), std::exp(-0.02), 1e-15);
    EXPECT_NEAR(th.imag(), 0.0, 1e-15);
  }
  EXPECT_NEAR(std::exp(-0.02), 0.9801987, 1e-7);
  const cplx small = theta_factor(m, m.initial_state(), 0.1, make_freq(1e-9, 0.1));
  EXPECT_NEAR(std::abs(small - 1.0), 0.0, 1e-15);
}

TEST(Expansion, ThetaWithPointMassJumps) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = PointMass{0.1, 1.0};
  const Model m = build_model(s);
  const double T = 1.0;
  const cplx th = theta_factor(m, m.initial_state(), T, make_freq(1.0, T));
  const cplx ph = (std::cos(0.1) - 1.0) + kI * (std::sin(0.1) - 0.1);
  EXPECT_LT(std::abs(th - std::exp(-0.02) * std::exp(T * ph)), 1e-15);
}

TEST(Expansion, ThetaMatchesLevyKhintchine) {
  const Model m = levy_double_exponential(0.03);
  for (double T : {0.05, 0.1, 0.25}) {
    for (double u : {0.5, 1.0, 2.0, 3.0}) {
      const Freq f = make_freq(u, T);
      const cplx exact = oracle::levy_cf(f.u_T, T, 0.03, 0.2, 1.0,
                                         oracle::lk_double_exponential(f.u_T, 10.0, 10.0, 0.5));
      EXPECT_LT(std::abs(theta_factor(m, m.initial_state(), T, f) - exact), 1e-10);
      EXPECT_LT(std::abs(cf_first_order(m, m.initial_state(), T, f) - exact), 1e-10);
    }
  }
}

TEST(Expansion, EtaSingleSurvivingTerm) {
  const Model m = bs(0.2, 0.0, 0.5);
  const double T = 0.3;
  const Freq f = make_freq(2.0, T);
  const double w = 2.0 / std::sqrt(0.3);
  const cplx expect = 0.5 * kI * w * w * w * T * T * 0.04 * 0.5;
  EXPECT_LT(std::abs(eta_correction(m, m.initial_state(), T, f) - expect), 1e-15);
  EXPECT_NEAR(std::abs(expect), 0.04382, 1e-5);
  const Model m2 = bs(0.2, 0.0, 1.0);
  EXPECT_LT(std::abs(eta_correction(m2, m2.initial_state(), T, f) - 2.0 * expect), 1e-15);
  EXPECT_EQ(eta_correction(bs(0.2), bs(0.2).initial_state(), T, f), cplx(0.0));
}

TEST(Expansion, EtaCapturesTheSqrtTLayerOfTheExactCf) {
  // sigma_t = 0.2 + 0.5 W_t has an exact CF; Theta misses an O(sqrt T) term
  // that eta removes, leaving an O(T) remainder.
  const Model m = bs(0.2, 0.0, 0.5);
  std::vector<double> Ts = {0.0125, 0.025, 0.05, 0.1}, r0, r1;
  for (double T : Ts) {
    const Freq f = make_freq(2.0, T);
    const cplx exact = oracle::gaussian_quadratic_cf(f.u_T, T, 0.2, 0.5);
    r0.push_back(std::abs(exact - theta_factor(m, m.initial_state(), T, f)));
    r1.push_back(std::abs(exact - cf_first_order(m, m.initial_state(), T, f)));
  }
  EXPECT_NEAR(slope(Ts, r0), 0.5, 0.1);
  EXPECT_NEAR(slope(Ts, r1), 1.0, 0.1);
}

TEST(Expansion, LambdaReducesToTheta) {
  const Model m = levy_double_exponential();
  const ModelState s = m.initial_state();
  const Freq f = make_freq(2.0, 0.1);
  EXPECT_EQ(lambda_expansion(m, s, s, 0.1, f), theta_factor(m, s, 0.1, f));
}

TEST(Expansion, LambdaBlackScholesVolOfVol) {
  const Model m = bs(0.2, 0.0, 0.5);
  const ModelState s = m.initial_state();
  const double T = 0.2;
  const Freq f = make_freq(1.5, T);
  const double w = f.u_T;
  const cplx expect =
      theta_factor(m, s, T, f) * std::exp(-0.5 * kI * w * w * w * 0.04 * 0.5 * T * T);
  EXPECT_LT(std::abs(lambda_expansion(m, s, s, T, f) - expect), 1e-15);
}

TEST(Expansion, LambdaPsiBlock) {
  ModelSpec sp = black_scholes_spec(0.2);
  sp.jumps.marks = PointMass{0.1, 1.0};
  sp.jumps.gamma_sigma_shape = {0.05, 0.0};
  sp.jumps.gamma_jump = 0.3;
  sp.jumps.intensity_vol = 0.2;
  const Model m = build_model(sp);
  const ModelState s = m.initial_state();
  const double T = 0.1;
  const Freq f = make_freq(2.0, T);
  const cplx psi = psi_terms(m.jumps(), s, s, f).sum();
  EXPECT_LT(std::abs(lambda_expansion(m, s, s, T, f) - theta_factor(m, s, T, f) * std::exp(T * T * psi)),
            1e-15);
}

TEST(Expansion, ConjugateSymmetry) {
  const Model m = moving_gamma_sigma_model();
  const ModelState s = m.initial_state();
  for (double u : {0.5, 2.0}) {
    const cplx a = lambda_expansion(m, s, s, 0.1, make_freq(u, 0.1));
    const cplx b = lambda_expansion(m, s, s, 0.1, make_freq(-u, 0.1));
    EXPECT_LT(std::abs(a - std::conj(b)), 1e-14);
  }
}

TEST(Expansion, LevyIncrementIsExactTenorEffect) {
  const Model m = levy_double_exponential(0.05);
  const ModelState s = m.initial_state();
  const double T = 0.2;
  const HFGrid g = make_hfgrid(1.0, T / 16, T, 1.5, 3);
  for (int i = 1; i <= 3; ++i) {
    const IncrementDecomposition d = increment_cf_expansion(m, g, i, s, s, 2.0);
    for (const auto& c : d.corrections) EXPECT_EQ(c.value, cplx(0.0)) << c.name;
    const auto exact_at = [&](double Tn) {
      const Freq f = make_freq(2.0, Tn);
      return oracle::levy_cf(f.u_T, Tn, 0.05, 0.2, 1.0,
                             oracle::lk_double_exponential(f.u_T, 10.0, 10.0, 0.5));
    };
    const cplx exact = exact_at(g.T_i(i - 1)) - exact_at(g.T_i(i));
    EXPECT_LT(std::abs(d.leading - exact), 1e-12);
    EXPECT_LT(std::abs(d.total() - exact), 1e-12);
  }
  EXPECT_THROW(increment_cf_expansion(m, g, 4, s, s, 2.0), Error);
  EXPECT_THROW(increment_cf_expansion(m, g, 0, s, s, 2.0), Error);
}

TEST(Expansion, BoundaryTermShrinksWithGridRatio) {
  const Model m = levy_double_exponential(0.05);
  const ModelState s = m.initial_state();
  const double T = 0.1;
  std::vector<double> ratios, sizes;
  for (double r : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const HFGrid g = make_hfgrid(1.0, r * T, T, 1.5, 1);
    ratios.push_back(r);
    sizes.push_back(std::abs(increment_cf_expansion(m, g, 1, s, s, 2.0).boundary));
  }
  EXPECT_GE(slope(ratios, sizes), 0.95);
}

TEST(Expansion, MovedSigmaDominantLine) {
  const Model m = bs(0.2);
  ModelState cur = m.initial_state();
  ModelState prev = cur;
  prev.sigma = 0.21;
  const HFGrid g = make_hfgrid(1.0, 0.1 / 16, 0.1, 1.5, 1);
  const IncrementDecomposition d = increment_cf_expansion(m, g, 1, prev, cur, 2.0);
  EXPECT_LT(std::abs(d.corrections[1].value - (-0.5 * 4.0 * 2.0 * 0.2 * 0.01)), 1e-16);
  for (size_t k = 0; k < d.corrections.size(); ++k) {
    if (k != 1) EXPECT_EQ(d.corrections[k].value, cplx(0.0));
  }
}

TEST(Expansion, ShrinkingStepVanishes) {
  const Model m = moving_gamma_sigma_model();
  const ModelState s = m.initial_state();
  double last = 1.0;
  for (double dn : {1e-3, 1e-5, 1e-7}) {
    const HFGrid g = make_hfgrid(1.0, dn, 0.1, 1.5, 1);
    const IncrementDecomposition d = increment_cf_expansion(m, g, 1, s, s, 2.0);
    const double size = std::abs(d.leading) + std::abs(d.boundary) + std::abs(d.corrections_sum());
    EXPECT_LT(size, last);
    last = size;
  }
  EXPECT_LT(last, 1e-6);
}

TEST(Expansion, VarianceIncrementBlackScholesIsSpotIncrement) {
  const Model m = bs(0.2);
  ModelState cur = m.initial_state();
  ModelState prev = cur;
  prev.sigma = 0.23;
  const HFGrid g = make_hfgrid(1.0, 0.1 / 16, 0.1, 1.5, 2);
  const ExpansionReport r = increment_variance_expansion(m, g, 2, prev, cur, 2.0);
  EXPECT_EQ(r.modeled_total().real(), 0.23 * 0.23 - 0.2 * 0.2);
  EXPECT_EQ(r.find("phi_term")->value->real(), 0.0);
  EXPECT_EQ(r.find("psi_term")->value->real(), 0.0);
  EXPECT_FALSE(r.find("dvCT_bucket")->value.has_value());
  EXPECT_EQ(r.find("residual")->order_tags.size(), 3u);
}

TEST(Expansion, VarianceIncrementMatchesLambdaImplied) {
  const Model m = moving_gamma_sigma_model();
  ModelState cur = m.initial_state();
  ModelState prev = cur;
  prev.sigma = 0.21;
  prev.gamma_sigma_scale = 1.1;
  const HFGrid g = make_hfgrid(1.0, 0.1 / 16, 0.1, 1.5, 1);
  const ExpansionReport r = increment_variance_expansion(m, g, 1, prev, cur, 2.0);
  EXPECT_NEAR(r.modeled_total().real(), r.find("lambda_implied_increment")->value->real(), 1e-13);
  EXPECT_NE(r.find("psi_term")->value->real(), 0.0);
}

TEST(Expansion, TransformLogScalesByInverseVariance) {
  const Model m = moving_gamma_sigma_model();
  ModelState cur = m.initial_state();
  ModelState prev = cur;
  prev.gamma_sigma_scale = 1.2;
  const HFGrid g = make_hfgrid(1.0, 0.1 / 16, 0.1, 1.5, 1);
  const auto rx = increment_transform_expansion(m, g, 1, prev, cur, 2.0, TransformKind::x, false);
  const auto rl = increment_transform_expansion(m, g, 1, prev, cur, 2.0, TransformKind::log, false);
  EXPECT_NEAR(rl.find("gamma_sigma_term")->value->real(),
              25.0 * rx.find("gamma_sigma_term")->value->real(), 1e-15);
}

TEST(Expansion, TransformIdentityAgreesWithVarianceReport) {
  const Model m = bs(0.2);
  ModelState cur = m.initial_state();
  ModelState prev = cur;
  prev.sigma = 0.22;
  const HFGrid g = make_hfgrid(1.0, 0.1 / 16, 0.1, 1.5, 1);
  const auto rx = increment_transform_expansion(m, g, 1, prev, cur, 2.0, TransformKind::x, false);
  const auto rv = increment_variance_expansion(m, g, 1, prev, cur, 2.0);
  EXPECT_EQ(rx.modeled_total(), rv.modeled_total());
}

TEST(Expansion, DebiasCancelsTenorLinearTerms) {
  const Model m = moving_gamma_sigma_model();
  ModelState cur = m.initial_state();
  ModelState prev = cur;
  prev.gamma_sigma_scale = 1.0 + 0.5 * 0.1 / 16;
  prev.sigma = 0.201;
  const HFGrid g = make_hfgrid(1.0, 0.1 / 16, 0.1, 1.5, 2);
  const auto plain = increment_transform_expansion(m, g, 2, prev, cur, 2.0, TransformKind::x, false);
  const auto deb = increment_transform_expansion(m, g, 2, prev, cur, 2.0, TransformKind::x, true);
  EXPECT_EQ(deb.find("dvCT_bucket")->value->real(), 0.0);
  EXPECT_EQ(deb.find("dvCT_bucket")->status, TermStatus::cancelled);
  EXPECT_LT(std::abs(deb.find("gamma_sigma_term")->value->real()), 1e-12);

  // Closed form of the gamma^sigma term: int (a0 + a1 z) F(dz) = a0 + a1 m1.
  const double m1 = 0.4 / 10.0 - 0.6 / 8.0;
  const double dh = prev.gamma_sigma_scale - cur.gamma_sigma_scale;
  const double q = -g.T_i(1) * cur.sigma * dh * 1.5 * (0.02 + 0.3 * m1);
  const double diff = (plain.modeled_total() - deb.modeled_total()).real();
  EXPECT_NEAR(plain.find("gamma_sigma_term")->value->real(), q, 1e-12 * std::abs(q));
  EXPECT_NEAR(diff, q, 1e-8 * std::abs(q));
}

TEST(Expansion, DegenerateVarianceGuard) {
  const Model m = bs(0.2);
  ModelState cur = m.initial_state();
  cur.sigma = 0.0;
  const HFGrid g = make_hfgrid(1.0, 0.01, 0.1, 1.5, 1);
  EXPECT_THROW(increment_transform_expansion(m, g, 1, cur, cur, 2.0, TransformKind::log, false),
               Error);
}
