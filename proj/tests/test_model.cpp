#include <gtest/gtest.h>

#include <cmath>

#include "cfx/error.hpp"
#include "cfx/model.hpp"

using namespace cfx;

namespace {

Errc code_of(const ModelSpec& spec) {
  try {
    build_model(spec);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::OutOfRange;  // sentinel: no error
}

ModelSpec point_mass_spec() {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = PointMass{0.1, 1.0};
  s.jumps.intensity0 = 1.0;
  return s;
}

}  // namespace

TEST(Model, BlackScholesAllPass) {
  const Model m = build_model(black_scholes_spec(0.2));
  EXPECT_TRUE(m.jumps().empty());
  EXPECT_TRUE(m.validity().all_pass());
  for (const auto& c : m.validity().integrals) {
    EXPECT_EQ(c.value, 0.0) << c.name;
    EXPECT_TRUE(c.finite);
  }
  EXPECT_TRUE(m.constant_coefficients());
  EXPECT_FALSE(m.validity().not_checked.empty());
}

TEST(Model, PointMassIntegrals) {
  const Model m = build_model(point_mass_spec());
  const auto* r1 = m.validity().find("int|gamma|^r nu");
  ASSERT_NE(r1, nullptr);
  EXPECT_NEAR(r1->value, 0.1, 1e-15);
  const auto* a2 = m.validity().find("int|gamma| nu");
  ASSERT_NE(a2, nullptr);
  EXPECT_NEAR(a2->value, 0.1, 1e-15);
  EXPECT_TRUE(m.validity().assumption2_summable);
  EXPECT_NEAR(m.validity().find("int|gamma|^2 nu")->value, 0.01, 1e-15);
  EXPECT_TRUE(m.validity().all_pass());
}

TEST(Model, TemperedStableBelowActivityIsRejected) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = TemperedStable{1.5, 0.1, 5.0};
  s.activity_exponent_r = 1.4;
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
}

TEST(Model, TemperedStableLowAlphaFailsSummability) {
  // For alpha in (1,2), int |z| z^{-1-alpha} dz diverges at 0, so the
  // summability flag must fail. With r above alpha the model still builds.
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = TemperedStable{1.2, 0.1, 5.0};
  s.activity_exponent_r = 1.5;
  const Model m = build_model(s);
  EXPECT_FALSE(m.validity().assumption2_summable);
  EXPECT_FALSE(m.validity().find("int|gamma| nu")->finite);
  EXPECT_TRUE(m.validity().assumption1_integrability);
  EXPECT_TRUE(m.validity().find("int|gamma|^r nu")->finite);
  EXPECT_GT(m.validity().find("int|gamma|^2 nu")->value, 0.0);
}

TEST(Model, InvalidInputs) {
  ModelSpec s = black_scholes_spec(-0.1);
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
  s = black_scholes_spec(0.2);
  s.activity_exponent_r = 2.0;
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
  s = black_scholes_spec(0.2);
  s.hidden_layers = 2;
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
  s = point_mass_spec();
  s.jumps.intensity0 = -1.0;
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
  s = black_scholes_spec(0.2);
  s.drift_alpha = std::nan("");
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
  s = black_scholes_spec(0.2);
  s.jumps.marks = DoubleExponential{-1.0, 10.0, 0.5};
  EXPECT_EQ(code_of(s), Errc::InvalidSpec);
}

TEST(Model, ReportIsDeterministic) {
  ModelSpec s = black_scholes_spec(0.2);
  s.jumps.marks = TemperedStable{1.5, 0.1, 5.0};
  s.activity_exponent_r = 1.7;
  s.jumps.gamma_sigma_shape = {0.0, 0.5};
  const Model m = build_model(s);
  const ValidityReport a = assumption_report(m);
  const ValidityReport b = assumption_report(m);
  ASSERT_EQ(a.integrals.size(), b.integrals.size());
  for (size_t k = 0; k < a.integrals.size(); ++k) {
    EXPECT_EQ(a.integrals[k].name, b.integrals[k].name);
    if (a.integrals[k].finite) {
      EXPECT_EQ(a.integrals[k].value, b.integrals[k].value);
    }
  }
}

TEST(Model, ConstantCoefficientDetection) {
  ModelSpec s = point_mass_spec();
  EXPECT_TRUE(build_model(s).constant_coefficients());
  s.vol_of_vol_ss = 0.5;
  EXPECT_FALSE(build_model(s).constant_coefficients());
  s = point_mass_spec();
  s.jumps.gamma_sigma_shape = {0.05, 0.0};
  EXPECT_FALSE(build_model(s).constant_coefficients());
}
