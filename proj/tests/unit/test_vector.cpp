#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "immse/error.hpp"
#include "immse/scalar_channel.hpp"
#include "immse/vector_channel.hpp"

using namespace immse;

namespace {

GaussianVec standard(Eigen::Index k) { return {Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Identity(k, k)}; }

AtomSet qpsk() {
  AtomSet a;
  for (double u : {-1.0, 1.0})
    for (double v : {-1.0, 1.0}) a.points.push_back(Eigen::Vector2d(u, v));
  a.probs.assign(4, 0.25);
  return a;
}

McConfig mc(std::size_t paths, std::uint64_t seed) {
  McConfig c;
  c.paths = paths;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(GaussianVector, Examples) {
  const auto m = VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), standard(2), 1.0);
  EXPECT_NEAR(gaussian_mi(m), std::log(2.0), 1e-14);
  EXPECT_NEAR(gaussian_mmse(m), 1.0, 1e-14);
}

TEST(GaussianVector, EigenOracle) {
  Eigen::MatrixXd H(3, 2);
  H << 1, 0.3, -0.2, 0.8, 0.5, 0.5;
  Eigen::MatrixXd C(2, 2);
  C << 2, 0.4, 0.4, 0.7;
  const double s = 1.7;
  const auto m = VectorChannelModel::common(H, GaussianVec{Eigen::VectorXd::Zero(2), C}, s);
  const Eigen::MatrixXd G = s * H * C * H.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  double mi = 0.0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) mi += 0.5 * std::log1p(es.eigenvalues()(i));
  EXPECT_NEAR(gaussian_mi(m), mi, 1e-13);
  // mmse = tr(H C H^T) - tr(H (C^-1 + s H^T H)^-1 ... ) expressed via error covariance of HX
  const Eigen::MatrixXd E = (C.inverse() + s * H.transpose() * H).inverse();
  EXPECT_NEAR(gaussian_mmse(m), (H * E * H.transpose()).trace(), 1e-12);
}

TEST(GaussianVector, BadCovariances) {
  Eigen::MatrixXd C(2, 2);
  C << 1, 2, 2, 1;  // indefinite
  EXPECT_THROW(VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), GaussianVec{Eigen::VectorXd::Zero(2), C}, 1.0),
               std::invalid_argument);
  // Rank one: the error covariance of HX is still defined but badly conditioned.
  C << 1, 1, 1, 1;
  EXPECT_THROW(gaussian_mmse(VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2),
                                                        GaussianVec{Eigen::VectorXd::Zero(2), C}, 1.0)),
               DegenerateCovariance);
}

TEST(VectorModel, RejectsBadShapes) {
  EXPECT_THROW(VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 3), standard(2), 1.0), std::invalid_argument);
  EXPECT_THROW(VectorChannelModel(Eigen::MatrixXd::Identity(2, 2), standard(2), Eigen::Vector2d(1.0, -1.0)),
               std::invalid_argument);
}

TEST(AtomVector, QpskHighSnrApproachesLog4) {
  const auto m = VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), qpsk(), 64.0);
  const auto r = atom_mi(m, mc(20000, 3));
  EXPECT_NEAR(r.value, std::log(4.0), 1e-6 + 3 * r.se);
}

TEST(AtomVector, BinaryMatchesScalar) {
  AtomSet b;
  b.points = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  b.probs = {0.5, 0.5};
  const auto m = VectorChannelModel::common(Eigen::MatrixXd::Identity(1, 1), b, 1.0);
  const auto i = atom_mi(m, mc(200000, 4));
  const auto e = atom_mmse(m, mc(200000, 5));
  EXPECT_NEAR(i.value, mi_binary_closed(1.0), 3 * i.se + 1e-9);
  EXPECT_NEAR(e.value, mmse_binary_closed(1.0), 3 * e.se + 1e-9);
}

TEST(VectorImmse, GaussianAtTightTolerance) {
  Eigen::MatrixXd H(2, 2);
  H << 1, 0.5, 0.2, 1;
  const auto m = VectorChannelModel::common(H, standard(2), 2.0);
  EXPECT_TRUE(vector_immse_check(m, 1e-4, mc(1, 1)).passed());
  EXPECT_TRUE(de_bruijn_check(m, 1e-4, mc(1, 1)).passed());
}

TEST(Fisher, RoutesAgreeForGaussian) {
  const auto m = VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), standard(2), 1.0);
  const auto f = fisher_matrix(m, mc(1, 1));
  EXPECT_NEAR((f.covariance_route - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((f.score_route - f.covariance_route).norm(), 0.0, 1e-12);
}

TEST(Fisher, RoutesAgreeForAtomsWithinNoise) {
  const auto m = VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), qpsk(), 1.0);
  const auto f = fisher_matrix(m, mc(100000, 9));
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      EXPECT_NEAR(f.covariance_route(i, j), f.score_route(i, j),
                  4 * std::hypot(f.covariance_se(i, j), f.score_se(i, j)) + 1e-12);
}

TEST(LikelihoodRatio, GaussianAndAtoms) {
  const auto g = VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), standard(2), 1.5);
  EXPECT_TRUE(likelihood_lemmas_check(g, Eigen::Vector2d(0.3, -0.7)).passed());
  const auto a = VectorChannelModel::common(Eigen::MatrixXd::Identity(2, 2), qpsk(), 1.5);
  EXPECT_TRUE(likelihood_lemmas_check(a, Eigen::Vector2d(0.3, -0.7)).passed());
}

TEST(Invariance, OrthogonalRotationOfOutput) {
  Eigen::MatrixXd H(2, 2);
  H << 1, 0.4, -0.3, 0.9;
  const double th = 0.7;
  Eigen::MatrixXd Q(2, 2);
  Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const auto a = VectorChannelModel::common(H, standard(2), 2.0);
  const auto b = VectorChannelModel::common(Q * H, standard(2), 2.0);
  EXPECT_NEAR(gaussian_mi(a), gaussian_mi(b), 1e-13);
  EXPECT_NEAR(gaussian_mmse(a), gaussian_mmse(b), 1e-12);
}

TEST(Multiuser, GaussianExact) {
  Eigen::MatrixXd H(2, 2);
  H << 1, 0.5, 0.5, 1;
  const VectorChannelModel m(H, standard(2), Eigen::Vector2d(1.0, 2.0));
  EXPECT_TRUE(multiuser_check(m, 1e-4, mc(1, 1)).passed());
}
