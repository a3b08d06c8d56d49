#include <gtest/gtest.h>

#include <cmath>

#include "immse/telegraph.hpp"

using namespace immse;

TEST(FIntegrals, Recurrences) {
  for (double xi : {-0.01, -0.2, -1.0, -2.0, -20.0}) EXPECT_TRUE(f_recurrence_check(xi).passed()) << xi;
}

TEST(FIntegrals, TableMatchesDirect) {
  const auto t = FIntegralTable::compute(-2.0);
  for (int i : {-1, 1, 3})
    for (int j : {-1, 1, 3}) {
      const double d = f_integral(i, j, -2.0);
      EXPECT_NEAR(t.at(i, j), d, 1e-10 * std::max(1.0, std::abs(d)));
    }
}

TEST(Telegraph, CmmseLimits) {
  EXPECT_NEAR(telegraph_cmmse({1.0, 1e-6}), 1.0, 1e-4);
  double prev = 1.0;
  for (double s : {0.1, 1.0, 3.0, 10.0, 100.0}) {
    const double c = telegraph_cmmse({1.0, s});
    EXPECT_LT(c, prev);
    EXPECT_GT(c, 0.0);
    prev = c;
  }
}

TEST(Telegraph, SmoothingHelps) {
  for (double s : {0.5, 3.0, 30.0}) {
    const TelegraphModel m{1.0, s};
    EXPECT_LT(telegraph_mmse(m), telegraph_cmmse(m));
  }
}

TEST(Telegraph, TimeScaling) {
  // Doubling the switching rate and the snr together leaves the filtering error unchanged.
  EXPECT_NEAR(telegraph_cmmse({1.0, 2.0}), telegraph_cmmse({2.0, 4.0}), 1e-12);
  EXPECT_NEAR(telegraph_mmse({1.0, 2.0}), telegraph_mmse({2.0, 4.0}), 1e-10);
}

TEST(Telegraph, DifferentialAndAveragedForms) {
  const double grid[] = {0.5, 1.0, 2.0, 5.0};
  EXPECT_TRUE(telegraph_differential_check(1.0, grid).passed());
  EXPECT_TRUE(verify_thm7(1.0, grid).passed());
  EXPECT_TRUE(duncan_check({1.0, 2.0}).passed());
  const TelegraphModel m{1.0, 3.0};
  EXPECT_NEAR(telegraph_averaged_mmse(1.0, 3.0), telegraph_cmmse(m), 1e-8);
}

TEST(Telegraph, RejectsBadModel) {
  EXPECT_THROW(telegraph_cmmse({-1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(telegraph_cmmse({1.0, -1.0}), std::invalid_argument);
}
