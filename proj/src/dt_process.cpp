#include "immse/dt_process.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "immse/error.hpp"

namespace immse {

void ARProcess::validate() const {
  if (!(std::abs(a) < 1.0)) throw std::invalid_argument("ARProcess: |a| must be < 1");
  if (n < 1) throw std::invalid_argument("ARProcess: n must be >= 1");
}

Eigen::MatrixXd ARProcess::covariance() const {
  validate();
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = std::pow(a, static_cast<double>(std::abs(i - j)));
  return s;
}

namespace {

void check_snr(double snr) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::invalid_argument("snr must be finite and >= 0");
}

std::string tag(const ARProcess& p, double snr) {
  return " a=" + std::to_string(p.a) + " n=" + std::to_string(p.n) + " snr=" + std::to_string(snr);
}

}  // namespace

MmseTriple kalman_triple(const ARProcess& p, double snr) {
  p.validate();
  check_snr(snr);
  const std::size_t n = p.n;
  const double a2 = p.a * p.a;
  MmseTriple t;
  t.cmmse.resize(n);
  t.pmmse.resize(n);
  t.mmse.resize(n);
  double prior = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    t.pmmse[i] = prior;
    t.cmmse[i] = prior / (1.0 + snr * prior);
    prior = a2 * t.cmmse[i] + (1.0 - a2);
  }
  t.mmse[n - 1] = t.cmmse[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    const double g = p.a * t.cmmse[i] / t.pmmse[i + 1];
    t.mmse[i] = t.cmmse[i] + g * g * (t.mmse[i + 1] - t.pmmse[i + 1]);
  }
  return t;
}

MmseTriple joint_gaussian_triple(const ARProcess& p, double snr) {
  p.validate();
  check_snr(snr);
  const Eigen::MatrixXd s = p.covariance();
  const auto n = s.rows();
  MmseTriple t;
  t.cmmse.resize(n);
  t.pmmse.resize(n);
  t.mmse.resize(n);
  // Var(X | Y_1..Y_k) = Sigma - Sigma_{:,1:k} (Sigma_{1:k,1:k} + I/snr)^-1 Sigma_{1:k,:}.
  auto posterior = [&](Eigen::Index k) -> Eigen::MatrixXd {
    if (k == 0 || snr == 0.0) return s;
    Eigen::MatrixXd m = s.topLeftCorner(k, k);
    m.diagonal().array() += 1.0 / snr;
    const Eigen::MatrixXd c = s.topRows(k);
    return s - c.transpose() * m.ldlt().solve(c);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    t.pmmse[i] = posterior(i)(i, i);
    t.cmmse[i] = posterior(i + 1)(i, i);
  }
  const Eigen::MatrixXd full = posterior(n);
  for (Eigen::Index i = 0; i < n; ++i) t.mmse[i] = full(i, i);
  return t;
}

double block_mi(const ARProcess& p, double snr) {
  check_snr(snr);
  Eigen::MatrixXd m = snr * p.covariance();
  m.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw DegenerateCovariance("block_mi: I + snr Sigma not positive definite");
  return llt.matrixLLT().diagonal().array().log().sum();
}

BlockMiRoutes block_mi_routes(const ARProcess& p, double snr) {
  BlockMiRoutes r;
  r.determinant = block_mi(p, snr);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.covariance(), Eigen::EigenvaluesOnly);
  for (double l : es.eigenvalues()) r.eigen += 0.5 * std::log1p(snr * l);
  const auto t = kalman_triple(p, snr);
  for (double q : t.pmmse) r.chain += 0.5 * std::log1p(snr * q);
  return r;
}

Report verify_corollary3(const ARProcess& p, double snr, double delta_fd, double tolerance) {
  p.validate();
  check_snr(snr);
  const double h = delta_fd * std::max(1.0, snr);
  double d;
  if (snr - h >= 0.0) {
    d = (block_mi(p, snr + h) - block_mi(p, snr - h)) / (2.0 * h);
  } else {
    d = (-3.0 * block_mi(p, snr) + 4.0 * block_mi(p, snr + h) - block_mi(p, snr + 2.0 * h)) / (2.0 * h);
  }
  const auto t = kalman_triple(p, snr);
  double half = 0.0;
  for (double m : t.mmse) half += 0.5 * m;
  Report r;
  r.suite = "corollary3";
  r.expect_close("dI/dsnr vs 1/2 sum mmse(i)" + tag(p, snr), d, half, tolerance);
  return r;
}

Report verify_thm9(const ARProcess& p, double snr) {
  const auto t = kalman_triple(p, snr);
  double sc = 0.0, sp = 0.0;
  Report r;
  r.suite = "thm9";
  const std::string at = tag(p, snr);
  for (std::size_t i = 0; i < p.n; ++i) {
    sc += t.cmmse[i];
    sp += t.pmmse[i];
    r.expect_less_equal("mmse <= cmmse i=" + std::to_string(i + 1) + at, t.mmse[i], t.cmmse[i], 1e-15);
    r.expect_less_equal("cmmse <= pmmse i=" + std::to_string(i + 1) + at, t.cmmse[i], t.pmmse[i], 1e-15);
  }
  const double mi = block_mi(p, snr);
  r.expect_less_equal("snr/2 sum cmmse <= I" + at, 0.5 * snr * sc, mi);
  r.expect_less_equal("I <= snr/2 sum pmmse" + at, mi, 0.5 * snr * sp);
  return r;
}

Report dt_lattice_check(std::span<const double> a_values, std::span<const double> snr_values,
                        std::span<const std::size_t> n_values, double tolerance) {
  Report r;
  r.suite = "dt_lattice";
  for (double a : a_values)
    for (double s : snr_values)
      for (std::size_t n : n_values) {
        const ARProcess p{a, n};
        r.append(verify_corollary3(p, s, 1e-4, tolerance));
        r.append(verify_thm9(p, s));
      }
  return r;
}

}  // namespace immse
