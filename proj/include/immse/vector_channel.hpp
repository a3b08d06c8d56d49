#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "immse/random.hpp"
#include "immse/report.hpp"
#include "immse/scalar_channel.hpp"

namespace immse {

struct AtomSet {
  std::vector<Eigen::VectorXd> points;  // each of length K
  std::vector<double> probs;
};

struct GaussianVec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // K x K, symmetric positive semidefinite
};

using VectorInput = std::variant<AtomSet, GaussianVec>;

// Y = H S X + N with S = diag(sqrt(snr_k)), H of size L x K.
class VectorChannelModel {
 public:
  VectorChannelModel(Eigen::MatrixXd H, VectorInput input, Eigen::VectorXd snr_diag);
  static VectorChannelModel common(Eigen::MatrixXd H, VectorInput input, double snr);

  const Eigen::MatrixXd& H() const { return H_; }
  const VectorInput& input() const { return input_; }
  const Eigen::VectorXd& snr() const { return snr_; }
  Eigen::Index L() const { return H_.rows(); }
  Eigen::Index K() const { return H_.cols(); }
  bool is_gaussian() const { return std::holds_alternative<GaussianVec>(input_); }
  // H S.
  Eigen::MatrixXd gain() const;
  // True when every snr_k is equal; common_snr() then returns it.
  bool has_common_snr() const;
  double common_snr() const;

  VectorChannelModel with_snr(Eigen::VectorXd snr_diag) const;
  VectorChannelModel with_common_snr(double snr) const;

 private:
  Eigen::MatrixXd H_;
  VectorInput input_;
  Eigen::VectorXd snr_;
};

// 1/2 log det(I + H S Sigma S H^T).
double gaussian_mi(const VectorChannelModel& m);
// Cov(X | Y) for Gaussian input.
Eigen::MatrixXd gaussian_error_covariance(const VectorChannelModel& m);
// tr(H Cov(X | Y) H^T); throws DegenerateCovariance when cond(Sigma) > 1e12.
double gaussian_mmse(const VectorChannelModel& m);

McEstimate atom_mi(const VectorChannelModel& m, const McConfig& mc);
McEstimate atom_mmse(const VectorChannelModel& m, const McConfig& mc);

struct FisherMatrix {
  Eigen::MatrixXd covariance_route;  // I - H S E[Cov(X|Y)] S H^T
  Eigen::MatrixXd score_route;       // E[score score^T]
  Eigen::MatrixXd covariance_se;     // entrywise standard errors (zero when exact)
  Eigen::MatrixXd score_se;
};

FisherMatrix fisher_matrix(const VectorChannelModel& m, const McConfig& mc);

// Finite difference of I in the common snr against mmse/2 (closed forms for
// Gaussian input; paired common-random-number estimate for atoms).
Report vector_immse_check(const VectorChannelModel& m, double delta_fd, const McConfig& mc,
                          double tolerance = 1e-7);

// h(t) = h(H X + sqrt(t) N) at t = 1/snr against (1/2) tr J(H X + sqrt(t) N).
Report de_bruijn_check(const VectorChannelModel& m, double delta_fd, const McConfig& mc, double tolerance = 1e-7);

// dI/dsnr_k against (1/2) sum_i sqrt(snr_i/snr_k) [H^T H]_ki E Cov(X_k, X_i | Y).
struct MultiuserResult {
  McEstimate lhs;
  McEstimate rhs;
  McEstimate difference;  // paired lhs - rhs
};

MultiuserResult multiuser_derivative(const VectorChannelModel& m, Eigen::Index k, double delta_fd, const McConfig& mc);
Report multiuser_check(const VectorChannelModel& m, double delta_fd, const McConfig& mc, double tolerance = 1e-6);

// With Z = H S X and l(y) = p_Y(y) / p_N(y): grad log l = E[Z|y],
// lap log l = E[|Z|^2 | y] - |E[Z|y]|^2, lap l / l = E[|Z|^2 | y], all by
// central differences with step 1e-4 (1 + |y|).
Report likelihood_lemmas_check(const VectorChannelModel& m, const Eigen::VectorXd& y, double grad_tolerance = 1e-6,
                               double laplacian_tolerance = 1e-5);

// log l(y) (exact for both input kinds).
double log_likelihood_ratio(const VectorChannelModel& m, const Eigen::VectorXd& y);

}  // namespace immse
