#include <gtest/gtest.h>

#include <cmath>

#include "immse/dt_process.hpp"

using namespace immse;

TEST(ArProcess, IidCase) {
  const ARProcess p{0.0, 4};
  const auto t = kalman_triple(p, 3.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(t.cmmse[i], 0.25, 1e-15);
    EXPECT_NEAR(t.mmse[i], 0.25, 1e-15);
    EXPECT_NEAR(t.pmmse[i], 1.0, 1e-15);
  }
  EXPECT_NEAR(block_mi(p, 3.0), 2.0 * std::log(4.0), 1e-13);
}

TEST(ArProcess, KalmanMatchesJointGaussian) {
  for (double a : {-0.9, 0.3, 0.99})
    for (double s : {0.1, 2.0, 50.0}) {
      const ARProcess p{a, 7};
      const auto k = kalman_triple(p, s), j = joint_gaussian_triple(p, s);
      for (std::size_t i = 0; i < p.n; ++i) {
        EXPECT_NEAR(k.cmmse[i], j.cmmse[i], 1e-10);
        EXPECT_NEAR(k.pmmse[i], j.pmmse[i], 1e-10);
        EXPECT_NEAR(k.mmse[i], j.mmse[i], 1e-10);
        EXPECT_LE(k.mmse[i], k.cmmse[i] + 1e-15);
        EXPECT_LE(k.cmmse[i], k.pmmse[i] + 1e-15);
      }
    }
}

TEST(ArProcess, MiRoutesAgree) {
  const auto r = block_mi_routes({0.7, 10}, 1.3);
  EXPECT_NEAR(r.determinant, r.eigen, 1e-12);
  EXPECT_NEAR(r.determinant, r.chain, 1e-12);
}

TEST(ArProcess, Reports) {
  const ARProcess p{0.5, 5};
  EXPECT_TRUE(verify_corollary3(p, 1.0).passed());
  EXPECT_TRUE(verify_thm9(p, 1.0).passed());
  const double a[] = {-0.5, 0.0, 0.8};
  const double s[] = {0.5, 4.0};
  const std::size_t n[] = {1, 3, 8};
  EXPECT_TRUE(dt_lattice_check(a, s, n).passed());
}

TEST(ArProcess, RejectsBadParameters) {
  EXPECT_THROW(block_mi({1.0, 3}, 1.0), std::invalid_argument);
  EXPECT_THROW(block_mi({0.5, 0}, 1.0), std::invalid_argument);
}
