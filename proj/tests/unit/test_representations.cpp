#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "immse/error.hpp"
#include "immse/representations.hpp"
#include "immse/scalar_channel.hpp"

using namespace immse;

namespace {
TailPolicy tail(double smax, TailEstimator e = TailEstimator::exponential_fit) { return {smax, e}; }
}  // namespace

TEST(TailPolicy, ParseAndValidate) {
  EXPECT_EQ(parse_tail_estimator("none"), TailEstimator::none);
  EXPECT_EQ(parse_tail_estimator("gaussian_tail"), TailEstimator::gaussian_tail);
  EXPECT_EQ(to_string(TailEstimator::exponential_fit), "exponential_fit");
  EXPECT_THROW(parse_tail_estimator("other"), std::invalid_argument);
  EXPECT_THROW(tail(-1.0).validate(), std::invalid_argument);
}

// Continuous laws lose mmse like 1/snr, so their tails use the power-law estimator.
TEST(Entropy, AtomsUnderMappings) {
  const auto law = InputLaw::atoms({-3.0, -1.0, 1.0, 3.0}, {0.25, 0.25, 0.25, 0.25});
  for (const auto& g : {Mapping::identity(), Mapping::affine(2.0, 1.0), Mapping::cubic(1.0, 0.0)})
    EXPECT_NEAR(entropy_via_mmse(law, g, tail(100.0)).value, std::log(4.0), 1e-6);
  EXPECT_NEAR(discrete_entropy(InputLaw::atoms({3.0}, {1.0})), 0.0, 0.0);
  EXPECT_NEAR(entropy_via_mmse(InputLaw::atoms({3.0}, {1.0}), Mapping::identity(), tail(100.0)).value, 0.0, 1e-12);
}

TEST(Entropy, BinaryRunningIntegralExceedsOne) {
  // Half the integral of mmse to snr 100 is ln 2 < 1, so the raw integral passes 1.
  const auto r = entropy_via_mmse(InputLaw::binary(), Mapping::identity(), tail(100.0));
  EXPECT_GT(2.0 * r.truncated, 1.0);
}

TEST(Entropy, UnresolvedTailThrows) {
  EXPECT_THROW(entropy_via_mmse(InputLaw::binary(), Mapping::identity(), tail(5.0, TailEstimator::none)),
               TailNotResolved);
}

TEST(NonGaussianness, GaussianIsZeroAndMixtureMatches) {
  EXPECT_NEAR(nongaussianness(InputLaw::gaussian(1.0, 2.0), tail(100.0)).value, 0.0, 1e-12);
  const auto mix = InputLaw::mixture({{0.5, -1, 0.25}, {0.5, 1, 0.25}});
  EXPECT_NEAR(nongaussianness(mix, tail(1e3, TailEstimator::gaussian_tail)).value, divergence_from_gaussian(mix), 1e-4);
  EXPECT_NEAR(differential_entropy_direct(InputLaw::gaussian(0, 4)),
              0.5 * std::log(2 * std::numbers::pi * std::numbers::e * 4), 1e-12);
}

TEST(NonGaussianness, UniformGridded) {
  const auto u = InputLaw::uniform_gridded(-std::sqrt(3.0), std::sqrt(3.0), 201);
  EXPECT_NEAR(differential_entropy_via_mmse(u, tail(1e3, TailEstimator::gaussian_tail)), std::log(2 * std::sqrt(3.0)), 5e-3);
}

TEST(MutualInformation, JointAtoms) {
  const JointAtoms same{{-1, 1}, {-1, 1}, {0.5, 0.5}};
  EXPECT_NEAR(mutual_information_direct(same), std::log(2.0), 1e-15);
  EXPECT_NEAR(mi_via_mmse_difference(same, tail(100.0)).value, std::log(2.0), 1e-6);
  const JointAtoms indep{{-1, -1, 1, 1}, {-1, 1, -1, 1}, {0.25, 0.25, 0.25, 0.25}};
  EXPECT_NEAR(mi_via_mmse_difference(indep, tail(100.0)).value, 0.0, 1e-9);
  const double e = 0.1;
  const JointAtoms bsc{{-1, -1, 1, 1}, {-1, 1, -1, 1}, {0.5 * (1 - e), 0.5 * e, 0.5 * e, 0.5 * (1 - e)}};
  const double h = -e * std::log(e) - (1 - e) * std::log(1 - e);
  EXPECT_NEAR(mutual_information_direct(bsc), std::log(2.0) - h, 1e-14);
  EXPECT_NEAR(mi_via_mmse_difference(bsc, tail(100.0)).value, std::log(2.0) - h, 1e-6);
}

TEST(Divergence, OutputAndInput) {
  const auto p = InputLaw::mixture({{0.5, -1, 0.25}, {0.5, 1, 0.25}});
  const auto q = InputLaw::gaussian(0, 1.25);
  const double grid[] = {0.1, 1.0, 5.0, 20.0};
  EXPECT_TRUE(output_divergence_monotonicity(p, q, grid).passed());
  EXPECT_NEAR(output_divergence(p, q, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(input_divergence(InputLaw::gaussian(0, 1), InputLaw::gaussian(1, 1)), 0.5, 1e-10);
}

TEST(Divergence, DiscreteLimit) {
  const double grid[] = {1.0, 4.0, 16.0, 64.0};
  EXPECT_TRUE(discrete_mi_limit_check(InputLaw::binary(), grid, 1e-6).passed());
}

TEST(Epi, RandomPairs) {
  for (std::uint64_t k = 0; k < 2; ++k) {
    const auto a = random_mixture(20050401, 2 * k), b = random_mixture(20050401, 2 * k + 1);
    EXPECT_TRUE(gamma_epi_check(a, b, tail(1e3, TailEstimator::gaussian_tail)).passed());
  }
}
