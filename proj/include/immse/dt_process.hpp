#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "immse/report.hpp"

namespace immse {

// Stationary AR(1): X_i = a X_{i-1} + sqrt(1 - a^2) W_i, unit variance,
// observed as Y_i = sqrt(snr) X_i + N_i for i = 1..n.
struct ARProcess {
  double a = 0.0;
  std::size_t n = 1;

  void validate() const;
  Eigen::MatrixXd covariance() const;  // a^|i-j|
};

struct MmseTriple {
  std::vector<double> cmmse;  // Var(X_i | Y_1..Y_i)
  std::vector<double> pmmse;  // Var(X_i | Y_1..Y_{i-1})
  std::vector<double> mmse;   // Var(X_i | Y_1..Y_n)
};

// Kalman filter from the stationary prior plus the fixed-interval (RTS)
// smoother.
MmseTriple kalman_triple(const ARProcess& p, double snr);
// Same quantities by conditioning the joint Gaussian directly (dense
// inverses of the leading blocks); O(n^4), for cross-checking.
MmseTriple joint_gaussian_triple(const ARProcess& p, double snr);

// 1/2 log det(I + snr Sigma) by Cholesky.
double block_mi(const ARProcess& p, double snr);

struct BlockMiRoutes {
  double determinant = 0.0;  // Cholesky of I + snr Sigma
  double eigen = 0.0;        // 1/2 sum log(1 + snr lambda_k)
  double chain = 0.0;        // 1/2 sum log(1 + snr pmmse(i)) (innovations)
};
BlockMiRoutes block_mi_routes(const ARProcess& p, double snr);

// Central difference of block_mi (step delta max(1, snr)) against
// 1/2 sum_i mmse(i).
Report verify_corollary3(const ARProcess& p, double snr, double delta_fd = 1e-4, double tolerance = 1e-6);

// snr/2 sum cmmse <= I <= snr/2 sum pmmse with the slacks reported, plus
// mmse(i) <= cmmse(i) <= pmmse(i) per index.
Report verify_thm9(const ARProcess& p, double snr);

// Both checks on every (a, snr, n) of the lattice, exact routes only.
Report dt_lattice_check(std::span<const double> a_values, std::span<const double> snr_values,
                        std::span<const std::size_t> n_values, double tolerance = 1e-6);

}  // namespace immse
