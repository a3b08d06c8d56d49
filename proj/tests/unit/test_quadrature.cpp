#include <gtest/gtest.h>

#include <cmath>

#include "immse/error.hpp"
#include "immse/quadrature.hpp"

using namespace immse;

TEST(GaussHermite, NormalMoments) {
  const auto& rule = gauss_hermite_rule(127);
  EXPECT_NEAR(expect_normal([](double z) { return 1.0; }, rule), 1.0, 1e-14);
  EXPECT_NEAR(expect_normal([](double z) { return z * z; }, rule), 1.0, 1e-13);
  EXPECT_NEAR(expect_normal([](double z) { return z * z * z * z; }, rule), 3.0, 1e-12);
  EXPECT_NEAR(expect_normal([](double z) { return z; }, rule, 2.0, 3.0), 2.0, 1e-13);
}

TEST(GaussHermite, RuleIsCachedAndValidated) {
  EXPECT_EQ(&gauss_hermite_rule(31), &gauss_hermite_rule(31));
  EXPECT_THROW(gauss_hermite_rule(1), std::invalid_argument);
}

TEST(Adaptive, SmoothAndKinked) {
  const auto r = integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0, {1e-13, 0.0, 100});
  EXPECT_NEAR(r.value, std::exp(1.0) - 1.0, 1e-13);
  const double br[] = {-1.0, 0.0, 1.0};
  const auto k = integrate_adaptive([](double x) { return std::abs(x); }, br, {1e-14, 0.0, 100});
  EXPECT_NEAR(k.value, 1.0, 1e-14);
}

TEST(Adaptive, ThrowsWhenBudgetExhausted) {
  auto f = [](double x) { return std::sin(1.0 / (x + 1e-9)); };
  EXPECT_THROW(integrate_adaptive(f, 0.0, 1.0, {1e-15, 0.0, 3}), NonConvergence);
}

TEST(GaussLegendre, ExactForDegree19) {
  EXPECT_NEAR(gauss_legendre10([](double x) { return std::pow(x, 19) + std::pow(x, 18); }, 0.0, 1.0),
              1.0 / 20 + 1.0 / 19, 1e-15);
}

TEST(QuadratureSpec, Validation) {
  QuadratureSpec q;
  EXPECT_NO_THROW(q.validate());
  q.hermite_order = 1;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = {};
  q.adaptive_tol = 0.0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
}
