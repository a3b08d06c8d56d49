#include <gtest/gtest.h>

#include <cmath>

#include "immse/error.hpp"
#include "immse/scalar_channel.hpp"
#include "immse/telegraph.hpp"
#include "immse/wonham.hpp"

using namespace immse;

namespace {

McConfig small(std::size_t paths, unsigned threads = 1) {
  McConfig mc;
  mc.paths = paths;
  mc.seed = 77;
  mc.threads = threads;
  mc.dt = 1e-3;
  mc.T = 10.0;
  return mc;
}

const TelegraphModel kModel{1.0, std::pow(10.0, 0.5)};

}  // namespace

TEST(Wonham, StepLimit) {
  EXPECT_THROW(check_filter_step({1.0, 100.0}, 1e-3), StepTooLarge);
  EXPECT_NO_THROW(check_filter_step({1.0, 10.0}, 1e-3));
  EXPECT_DOUBLE_EQ(default_filter_step({1.0, 100.0}), 1e-4);
  auto mc = small(10);
  mc.dt = 2e-3;
  EXPECT_THROW(wonham_ensemble({1.0, 10.0}, mc), StepTooLarge);
}

TEST(Wonham, PathShapeAndBounds) {
  const auto p = simulate_telegraph(kModel, 2.0, 1e-3, 3);
  ASSERT_EQ(p.x.size(), 2001u);
  EXPECT_NEAR(p.horizon(), 2.0, 1e-12);
  for (double x : p.x) EXPECT_TRUE(x == 1.0 || x == -1.0);
  const auto f = wonham_filter(p, kModel);
  const auto b = anticausal_filter(p, kModel);
  const auto s = yao_smoother(f, b);
  EXPECT_EQ(f.front(), 0.0);
  EXPECT_EQ(b.back(), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) {
    EXPECT_LE(std::abs(f[k]), 1.0);
    EXPECT_LE(std::abs(b[k]), 1.0);
    EXPECT_LE(std::abs(s[k]), 1.0);
  }
}

TEST(Wonham, ReverseTwiceIsIdentity) {
  const auto p = simulate_telegraph(kModel, 0.5, 1e-3, 4);
  const auto r = reversed(reversed(p));
  EXPECT_EQ(r.x, p.x);
  EXPECT_EQ(r.dy, p.dy);
}

TEST(Wonham, ZeroSnrKeepsPriorMean) {
  const TelegraphModel m{1.0, 0.0};
  const auto p = simulate_telegraph(m, 1.0, 1e-3, 5);
  for (double v : wonham_filter(p, m)) EXPECT_EQ(v, 0.0);
}

TEST(Yao, UninformativeBackwardLeavesForward) {
  const std::vector<double> f{-0.9, 0.0, 0.3, 0.99};
  const std::vector<double> z(4, 0.0);
  EXPECT_EQ(yao_smoother(f, z), f);
  const std::vector<double> one{0.5};
  EXPECT_NEAR(yao_smoother(one, one)[0], 0.8, 1e-15);
  EXPECT_THROW(yao_smoother(f, one), std::invalid_argument);
}

TEST(Wonham, EnsembleMatchesClosedForms) {
  const auto r = wonham_check(kModel, small(2000));
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.checks[0].rhs, telegraph_cmmse(kModel), 1e-15);
}

TEST(Wonham, DeterministicAndThreadInvariant) {
  const auto a = wonham_ensemble(kModel, small(300, 1));
  const auto b = wonham_ensemble(kModel, small(300, 1));
  const auto c = wonham_ensemble(kModel, small(300, 4));
  EXPECT_EQ(a.causal.value, b.causal.value);
  EXPECT_EQ(a.smoothed.value, c.smoothed.value);
  EXPECT_EQ(a.causal.se, c.causal.se);
}

TEST(Wonham, HalvingStepChangesLittle) {
  auto mc = small(20000, 0);
  mc.T = 1.0;
  mc.burn_in = 2.0;
  EXPECT_TRUE(wonham_dt_halving_check(kModel, mc).passed());
}

TEST(TimeSnr, ConstantInput) {
  auto mc = small(2000, 0);
  const double u[] = {0.0, 0.5, 1.0};
  EXPECT_TRUE(time_snr_transform_check(InputLaw::binary(), 2.0, 1.0, mc, u).passed());
  const double bad[] = {2.0};
  EXPECT_THROW(time_snr_transform_check(InputLaw::binary(), 2.0, 1.0, mc, bad), std::invalid_argument);
}
