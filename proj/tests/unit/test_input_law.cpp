#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "immse/input_law.hpp"
#include "immse/scalar_channel.hpp"

using namespace immse;

namespace {

std::vector<InputLaw> all_laws() {
  return {InputLaw::binary(), InputLaw::atoms({-3, -1, 1, 3}, {0.1, 0.2, 0.3, 0.4}), InputLaw::gaussian(0.5, 2.0),
          InputLaw::mixture({{0.5, -1, 0.25}, {0.5, 1, 0.25}}), InputLaw::uniform_gridded(-1.0, 2.0, 61)};
}

}  // namespace

TEST(Moments, ClosedForms) {
  const auto g = moments(InputLaw::gaussian(0, 1));
  EXPECT_DOUBLE_EQ(g.mean, 0.0);
  EXPECT_DOUBLE_EQ(g.variance, 1.0);
  EXPECT_DOUBLE_EQ(g.m3, 0.0);
  EXPECT_DOUBLE_EQ(g.m4, 3.0);
  const auto b = moments(InputLaw::binary());
  EXPECT_DOUBLE_EQ(b.variance, 1.0);
  EXPECT_DOUBLE_EQ(b.m4, 1.0);
  const auto m = moments(InputLaw::mixture({{0.5, -1, 0.25}, {0.5, 1, 0.25}}));
  EXPECT_NEAR(m.mean, 0.0, 1e-15);
  EXPECT_NEAR(m.variance, 1.25, 1e-15);
  const auto u = moments(InputLaw::uniform_gridded(-std::sqrt(3.0), std::sqrt(3.0), 201));
  EXPECT_NEAR(u.variance, 1.0, 1e-12);
}

TEST(Moments, KurtosisBoundAfterStandardizing) {
  for (const auto& law : all_laws()) {
    const auto s = standardized(moments(law));
    EXPECT_NEAR(s.mean, 0.0, 1e-12);
    EXPECT_NEAR(s.variance, 1.0, 1e-12);
    EXPECT_GE(s.m4, 1.0 - 1e-12) << law.describe();
  }
}

TEST(Sampling, MatchesMomentsAndIsDeterministic) {
  const std::size_t n = 1000000;
  for (const auto& law : all_laws()) {
    const auto x = sample(law, 42, n);
    double s1 = 0.0, s2 = 0.0;
    for (double v : x) s1 += v;
    const double mean = s1 / n;
    for (double v : x) s2 += (v - mean) * (v - mean);
    const double var = s2 / (n - 1);
    const auto m = moments(law);
    EXPECT_NEAR(mean, m.mean, 5.0 * std::sqrt(m.variance / n)) << law.describe();
    // SE of the sample variance: sqrt((mu4 - var^2) / n)
    const double mu4 = m.m4 - 4 * m.mean * m.m3 + 6 * m.mean * m.mean * (m.variance + m.mean * m.mean) -
                       3 * std::pow(m.mean, 4);
    EXPECT_NEAR(var, m.variance, 5.0 * std::sqrt((mu4 - m.variance * m.variance) / n) + 1e-5) << law.describe();
  }
  EXPECT_EQ(sample(InputLaw::gaussian(2, 4), 9, 100), sample(InputLaw::gaussian(2, 4), 9, 100));
}

TEST(InputLaw, RejectsInvalid) {
  EXPECT_THROW(InputLaw::atoms({1, 2}, {0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(InputLaw::atoms({1, 2}, {0.5}), std::invalid_argument);
  EXPECT_THROW(InputLaw::gaussian(0, 0), std::invalid_argument);
  EXPECT_THROW(InputLaw::mixture({{0.5, 0, 1}, {0.4, 1, 1}}), std::invalid_argument);
  EXPECT_THROW(InputLaw::gridded({0, 1, 0.5}, {1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(InputLaw::gridded({0, 1}, {0, 0}), std::invalid_argument);
}

TEST(IntegrateOutput, Examples) {
  const QuadratureSpec q;
  for (const auto& law : all_laws())
    for (double s : {0.0, 0.1, 1.0, 10.0})
      EXPECT_NEAR(integrate_output([](double) { return 1.0; }, law, s, q), 1.0, 1e-9) << law.describe() << " " << s;
  EXPECT_NEAR(integrate_output([](double y) { return y * y; }, InputLaw::gaussian(0, 1), 3.0, q), 4.0, 1e-10);
  EXPECT_NEAR(integrate_output([](double y) { return std::pow(y, 4); }, InputLaw::binary(), 1.0, q), 10.0, 1e-10);
}

TEST(IntegrateOutput, HalvingToleranceIsStable) {
  QuadratureSpec a, b;
  b.adaptive_tol = a.adaptive_tol / 2;
  for (const auto& law : all_laws()) {
    const double x = mmse(ScalarChannel(law, 2.0, a)), y = mmse(ScalarChannel(law, 2.0, b));
    EXPECT_LT(std::abs(x - y), 1e-9) << law.describe();
  }
}

TEST(Posterior, GriddedRoutesAgreeAcrossSwitch) {
  // Below sqrt(snr) = 1 panels are integrated numerically, above in closed form.
  const auto law = InputLaw::uniform_gridded(-1.0, 2.0, 61);
  for (double y : {-1.0, 0.3, 2.5}) {
    const auto lo = posterior_at(law, 0.999999, y), hi = posterior_at(law, 1.000001, y);
    EXPECT_NEAR(lo.mean, hi.mean, 1e-5);
    EXPECT_NEAR(lo.variance, hi.variance, 1e-5);
    EXPECT_NEAR(lo.log_density, hi.log_density, 1e-5);
  }
}

TEST(Posterior, GriddedMatchesNarrowMixture) {
  // A fine grid of a Gaussian density behaves like the Gaussian itself.
  std::vector<double> x, p;
  for (int i = -800; i <= 800; ++i) {
    x.push_back(i * 0.01);
    p.push_back(std::exp(-0.5 * x.back() * x.back()) / std::sqrt(2 * std::numbers::pi));
  }
  const auto g = InputLaw::gridded(x, p);
  for (double s : {0.01, 0.5, 4.0, 50.0})
    EXPECT_NEAR(mmse(ScalarChannel(g, s)), 1.0 / (1.0 + s), 5e-5) << s;
}

TEST(Convolution, MixtureAndAtoms) {
  const auto c = convolve(InputLaw::binary(), InputLaw::binary());
  const auto m = moments(c);
  EXPECT_NEAR(m.variance, 2.0, 1e-14);
  const auto g = convolve(InputLaw::gaussian(1, 2), InputLaw::mixture({{0.5, -1, 0.25}, {0.5, 1, 0.25}}));
  EXPECT_NEAR(moments(g).variance, 3.25, 1e-14);
  EXPECT_NEAR(moments(g).mean, 1.0, 1e-14);
  const auto a = affine_map(InputLaw::binary(), 2.0, 1.0);
  EXPECT_NEAR(moments(a).mean, 1.0, 1e-15);
  EXPECT_NEAR(moments(a).variance, 4.0, 1e-15);
}
