#include "immse/vector_channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "immse/error.hpp"

namespace immse {

namespace {

constexpr std::size_t kMaxAtoms = std::size_t{1} << 16;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Second-order stencil for dF/ds: central when s - h >= 0, else one-sided.
struct Stencil {
  std::vector<double> at;
  std::vector<double> weight;
};

Stencil stencil(double s, double h) {
  if (s - h >= 0.0) return {{s - h, s + h}, {-0.5 / h, 0.5 / h}};
  return {{s, s + h, s + 2.0 * h}, {-1.5 / h, 2.0 / h, -0.5 / h}};
}

// Exact posterior over a finite atom set for one received vector.
class AtomKernel {
 public:
  AtomKernel(const AtomSet& atoms, Eigen::Index K) : n_(atoms.points.size()), X_(K, static_cast<Eigen::Index>(n_)) {
    for (std::size_t i = 0; i < n_; ++i) X_.col(static_cast<Eigen::Index>(i)) = atoms.points[i];
    logp_.resize(n_);
    cdf_.resize(n_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      logp_[i] = atoms.probs[i] > 0.0 ? std::log(atoms.probs[i]) : -std::numeric_limits<double>::infinity();
      cdf_[i] = (acc += atoms.probs[i]);
    }
  }

  std::size_t size() const { return n_; }
  const Eigen::MatrixXd& points() const { return X_; }
  double prob(std::size_t i) const { return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1]; }

  std::size_t draw(Engine& eng) const {
    const double u = boost::random::uniform_01<double>()(eng) * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  struct Posterior {
    Eigen::VectorXd weights;
    double divergence = 0.0;  // D(P_{X|Y=y} || P_X)
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
  };

  // AX holds the noiseless outputs A x_i as columns.
  void evaluate(const Eigen::MatrixXd& AX, const Eigen::VectorXd& y, Posterior& out) const {
    Eigen::VectorXd lw(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      lw(ii) = logp_[i] - 0.5 * (y - AX.col(ii)).squaredNorm();
    }
    const double m = lw.maxCoeff();
    const double lse = m + std::log((lw.array() - m).exp().sum());
    out.weights = (lw.array() - lse).exp().matrix();
    out.divergence = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double w = out.weights(ii);
      if (w > 0.0) out.divergence += w * (lw(ii) - lse - logp_[i]);
    }
    out.mean = X_ * out.weights;
    const Eigen::MatrixXd centered = X_.colwise() - out.mean;
    out.cov = centered * out.weights.asDiagonal() * centered.transpose();
  }

 private:
  std::size_t n_;
  Eigen::MatrixXd X_;
  std::vector<double> logp_;
  std::vector<double> cdf_;
};

Eigen::MatrixXd gain_for(const Eigen::MatrixXd& H, const Eigen::VectorXd& snr) {
  return H * snr.array().sqrt().matrix().asDiagonal();
}

Eigen::VectorXd normal_vector(Engine& eng, Eigen::Index L) {
  boost::random::normal_distribution<double> normal;
  Eigen::VectorXd n(L);
  for (Eigen::Index i = 0; i < L; ++i) n(i) = normal(eng);
  return n;
}

// Monte Carlo over (X, N) for atom inputs. Small atom sets are summed exactly
// for every noise draw; larger ones draw X. f(j, n, out) writes q per-sample
// quantities for atom j and noise n, using `post` as scratch.
constexpr std::size_t kStratifyAtoms = 256;

template <class F>
std::vector<Stats> atom_mc(const AtomKernel& kernel, Eigen::Index L, std::size_t q, const McConfig& mc, F&& f) {
  mc.validate();
  const bool stratify = kernel.size() <= kStratifyAtoms;
  return mc_blocks(mc.seed, mc.paths, mc.resolved_threads(), [&](Engine& eng, std::size_t count) {
    std::vector<Stats> s(q);
    std::vector<double> acc(q), tmp(q);
    AtomKernel::Posterior post;
    for (std::size_t i = 0; i < count; ++i) {
      const Eigen::VectorXd n = normal_vector(eng, L);
      if (stratify) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = 0; j < kernel.size(); ++j) {
          const double p = kernel.prob(j);
          if (p == 0.0) continue;
          f(static_cast<Eigen::Index>(j), n, post, tmp.data());
          for (std::size_t k = 0; k < q; ++k) acc[k] += p * tmp[k];
        }
      } else {
        f(static_cast<Eigen::Index>(kernel.draw(eng)), n, post, acc.data());
      }
      for (std::size_t k = 0; k < q; ++k) s[k].add(acc[k]);
    }
    return s;
  });
}

const AtomSet& atoms_of(const VectorChannelModel& m) {
  const auto* a = std::get_if<AtomSet>(&m.input());
  if (!a) throw std::invalid_argument("operation needs an atom-set input");
  return *a;
}

const GaussianVec& gaussian_of(const VectorChannelModel& m) {
  const auto* g = std::get_if<GaussianVec>(&m.input());
  if (!g) throw std::invalid_argument("operation needs a Gaussian input");
  return *g;
}

Eigen::LLT<Eigen::MatrixXd> output_factor(const VectorChannelModel& m, Eigen::MatrixXd* C_out = nullptr) {
  const auto& g = gaussian_of(m);
  const Eigen::MatrixXd A = m.gain();
  const Eigen::MatrixXd C = A * g.cov * A.transpose();
  if (C_out) *C_out = C;
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd::Identity(m.L(), m.L()) + C);
  if (llt.info() != Eigen::Success) throw DegenerateCovariance("I + H S Sigma S H^T is not positive definite");
  return llt;
}

}  // namespace

VectorChannelModel::VectorChannelModel(Eigen::MatrixXd H, VectorInput input, Eigen::VectorXd snr_diag)
    : H_(std::move(H)), input_(std::move(input)), snr_(std::move(snr_diag)) {
  if (H_.rows() < 1 || H_.cols() < 1 || !all_finite(H_)) throw std::invalid_argument("VectorChannelModel: H must be a finite non-empty matrix");
  if (snr_.size() != H_.cols()) throw std::invalid_argument("VectorChannelModel: snr_diag length must equal the columns of H");
  for (Eigen::Index k = 0; k < snr_.size(); ++k) {
    if (!(snr_(k) >= 0.0) || !std::isfinite(snr_(k))) throw std::invalid_argument("VectorChannelModel: snr entries must be finite and >= 0");
  }
  std::visit(
      [&](auto& in) {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, AtomSet>) {
          if (in.points.empty() || in.points.size() != in.probs.size()) throw std::invalid_argument("AtomSet: need matching non-empty points/probs");
          if (in.points.size() > kMaxAtoms) throw std::invalid_argument("AtomSet: at most 65536 atoms");
          double total = 0.0;
          for (std::size_t i = 0; i < in.points.size(); ++i) {
            if (in.points[i].size() != H_.cols() || !in.points[i].allFinite()) throw std::invalid_argument("AtomSet: point dimension must equal K");
            if (!(in.probs[i] >= 0.0)) throw std::invalid_argument("AtomSet: negative probability");
            total += in.probs[i];
          }
          if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("AtomSet: probabilities must sum to 1 within 1e-12");
        } else {
          if (in.mean.size() != H_.cols() || in.cov.rows() != H_.cols() || in.cov.cols() != H_.cols())
            throw std::invalid_argument("GaussianVec: dimensions must match K");
          if (!in.mean.allFinite() || !in.cov.allFinite()) throw std::invalid_argument("GaussianVec: non-finite entries");
          const double scale = std::max(1.0, in.cov.cwiseAbs().maxCoeff());
          if ((in.cov - in.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw std::invalid_argument("GaussianVec: covariance must be symmetric");
          in.cov = 0.5 * (in.cov + in.cov.transpose());
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(in.cov, Eigen::EigenvaluesOnly);
          if (es.eigenvalues().minCoeff() < -1e-12 * scale) throw std::invalid_argument("GaussianVec: covariance must be positive semidefinite");
        }
      },
      input_);
}

VectorChannelModel VectorChannelModel::common(Eigen::MatrixXd H, VectorInput input, double snr) {
  const Eigen::Index K = H.cols();
  return VectorChannelModel(std::move(H), std::move(input), Eigen::VectorXd::Constant(K, snr));
}

Eigen::MatrixXd VectorChannelModel::gain() const { return gain_for(H_, snr_); }

bool VectorChannelModel::has_common_snr() const { return (snr_.array() == snr_(0)).all(); }

double VectorChannelModel::common_snr() const {
  if (!has_common_snr()) throw std::invalid_argument("model has per-user snr values");
  return snr_(0);
}

VectorChannelModel VectorChannelModel::with_snr(Eigen::VectorXd snr_diag) const {
  return VectorChannelModel(H_, input_, std::move(snr_diag));
}

VectorChannelModel VectorChannelModel::with_common_snr(double snr) const {
  return with_snr(Eigen::VectorXd::Constant(K(), snr));
}

double gaussian_mi(const VectorChannelModel& m) {
  const auto llt = output_factor(m);
  return llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd gaussian_error_covariance(const VectorChannelModel& m) {
  const auto& g = gaussian_of(m);
  const auto llt = output_factor(m);
  const Eigen::MatrixXd SA = m.gain() * g.cov;  // A Sigma
  return g.cov - SA.transpose() * llt.solve(SA);
}

double gaussian_mmse(const VectorChannelModel& m) {
  const auto& g = gaussian_of(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw DegenerateCovariance("gaussian_mmse: covariance condition number exceeds 1e12");
  return (m.H() * gaussian_error_covariance(m) * m.H().transpose()).trace();
}

namespace {

struct AtomMoments {
  McEstimate mi;
  McEstimate mmse;
};

AtomMoments atom_moments(const VectorChannelModel& m, const McConfig& mc) {
  const AtomKernel kernel(atoms_of(m), m.K());
  const Eigen::MatrixXd AX = m.gain() * kernel.points();
  const Eigen::MatrixXd& H = m.H();
  auto stats = atom_mc(kernel, m.L(), 2, mc, [&](Eigen::Index j, const Eigen::VectorXd& n, AtomKernel::Posterior& post, double* out) {
    kernel.evaluate(AX, AX.col(j) + n, post);
    out[0] = post.divergence;
    out[1] = (H * post.cov * H.transpose()).trace();
  });
  return {{stats[0].mean(), stats[0].se(), stats[0].count()}, {stats[1].mean(), stats[1].se(), stats[1].count()}};
}

}  // namespace

McEstimate atom_mi(const VectorChannelModel& m, const McConfig& mc) { return atom_moments(m, mc).mi; }

McEstimate atom_mmse(const VectorChannelModel& m, const McConfig& mc) { return atom_moments(m, mc).mmse; }

FisherMatrix fisher_matrix(const VectorChannelModel& m, const McConfig& mc) {
  const Eigen::Index L = m.L();
  FisherMatrix out;
  if (m.is_gaussian()) {
    Eigen::MatrixXd C;
    const auto llt = output_factor(m, &C);
    const Eigen::MatrixXd J = llt.solve(Eigen::MatrixXd::Identity(L, L));
    const Eigen::MatrixXd A = m.gain();
    out.covariance_route = Eigen::MatrixXd::Identity(L, L) - A * gaussian_error_covariance(m) * A.transpose();
    out.score_route = J;
    out.covariance_se = Eigen::MatrixXd::Zero(L, L);
    out.score_se = Eigen::MatrixXd::Zero(L, L);
    return out;
  }
  const AtomKernel kernel(atoms_of(m), m.K());
  const Eigen::MatrixXd A = m.gain();
  const Eigen::MatrixXd AX = A * kernel.points();
  const auto LL = static_cast<std::size_t>(L * L);
  auto stats = atom_mc(kernel, L, 2 * LL, mc, [&](Eigen::Index j, const Eigen::VectorXd& n, AtomKernel::Posterior& post, double* out) {
    const Eigen::VectorXd y = AX.col(j) + n;
    kernel.evaluate(AX, y, post);
    const Eigen::MatrixXd cov_route = Eigen::MatrixXd::Identity(L, L) - A * post.cov * A.transpose();
    const Eigen::VectorXd sc = A * post.mean - y;
    for (Eigen::Index r = 0; r < L; ++r)
      for (Eigen::Index c = 0; c < L; ++c) {
        const auto idx = static_cast<std::size_t>(r * L + c);
        out[idx] = cov_route(r, c);
        out[LL + idx] = sc(r) * sc(c);
      }
  });
  out.covariance_route.resize(L, L);
  out.score_route.resize(L, L);
  out.covariance_se.resize(L, L);
  out.score_se.resize(L, L);
  for (Eigen::Index a = 0; a < L; ++a)
    for (Eigen::Index b = 0; b < L; ++b) {
      const auto idx = static_cast<std::size_t>(a * L + b);
      out.covariance_route(a, b) = stats[idx].mean();
      out.covariance_se(a, b) = stats[idx].se();
      out.score_route(a, b) = stats[LL + idx].mean();
      out.score_se(a, b) = stats[LL + idx].se();
    }
  return out;
}

Report vector_immse_check(const VectorChannelModel& m, double delta_fd, const McConfig& mc, double tolerance) {
  const double s = m.common_snr();
  const Stencil st = stencil(s, fd_step(delta_fd, s));
  Report r;
  r.suite = "vector_immse";
  if (m.is_gaussian()) {
    double lhs = 0.0;
    for (std::size_t i = 0; i < st.at.size(); ++i) lhs += st.weight[i] * gaussian_mi(m.with_common_snr(st.at[i]));
    r.expect_close("dI/dsnr vs mmse/2 (Gaussian input)", lhs, 0.5 * gaussian_mmse(m), tolerance);
    return r;
  }
  const AtomKernel kernel(atoms_of(m), m.K());
  std::vector<Eigen::MatrixXd> AXs;
  for (double v : st.at) AXs.push_back(m.with_common_snr(v).gain() * kernel.points());
  const Eigen::MatrixXd AX = m.gain() * kernel.points();
  auto stats = atom_mc(kernel, m.L(), 3, mc, [&](Eigen::Index j, const Eigen::VectorXd& n, AtomKernel::Posterior& post, double* out) {
    double d = 0.0;
    for (std::size_t p = 0; p < AXs.size(); ++p) {
      kernel.evaluate(AXs[p], AXs[p].col(j) + n, post);
      d += st.weight[p] * post.divergence;
    }
    kernel.evaluate(AX, AX.col(j) + n, post);
    const double half_mmse = 0.5 * (m.H() * post.cov * m.H().transpose()).trace();
    out[0] = d;
    out[1] = half_mmse;
    out[2] = d - half_mmse;
  });
  r.expect_close("dI/dsnr vs mmse/2 (atoms, paired draws)", stats[0].mean(), stats[1].mean(), 3.0 * stats[2].se());
  r.note("paired difference " + fmt(stats[2].mean()) + " +- " + fmt(stats[2].se()) + " over " +
         std::to_string(stats[2].count()) + " draws");
  return r;
}

Report de_bruijn_check(const VectorChannelModel& m, double delta_fd, const McConfig& mc, double tolerance) {
  const double s = m.common_snr();
  if (!(s > 0.0)) throw std::invalid_argument("de_bruijn_check: snr must be > 0");
  const double t = 1.0 / s;
  const Stencil st = stencil(t, fd_step(delta_fd, t));
  const double L = static_cast<double>(m.L());
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  double log_term = 0.0;
  for (std::size_t i = 0; i < st.at.size(); ++i) log_term += st.weight[i] * 0.5 * L * std::log(two_pi_e * st.at[i]);
  Report r;
  r.suite = "debruijn";
  if (m.is_gaussian()) {
    double lhs = log_term;
    for (std::size_t i = 0; i < st.at.size(); ++i) lhs += st.weight[i] * gaussian_mi(m.with_common_snr(1.0 / st.at[i]));
    const FisherMatrix J = fisher_matrix(m, mc);
    r.expect_close("dh/dt vs tr J(HX + sqrt(t) N)/2 (Gaussian input)", lhs, 0.5 * s * J.score_route.trace(), tolerance);
    r.expect_close("Fisher routes agree (Gaussian input)", J.covariance_route.trace(), J.score_route.trace(), tolerance);
    return r;
  }
  const AtomKernel kernel(atoms_of(m), m.K());
  std::vector<Eigen::MatrixXd> AXs;
  for (double v : st.at) AXs.push_back(m.with_common_snr(1.0 / v).gain() * kernel.points());
  const Eigen::MatrixXd A = m.gain();
  const Eigen::MatrixXd AX = A * kernel.points();
  auto stats = atom_mc(kernel, m.L(), 3, mc, [&](Eigen::Index j, const Eigen::VectorXd& n, AtomKernel::Posterior& post, double* out) {
    double lhs = log_term;
    for (std::size_t p = 0; p < AXs.size(); ++p) {
      kernel.evaluate(AXs[p], AXs[p].col(j) + n, post);
      lhs += st.weight[p] * post.divergence;
    }
    kernel.evaluate(AX, AX.col(j) + n, post);
    const double rhs = 0.5 * s * (L - (A * post.cov * A.transpose()).trace());
    out[0] = lhs;
    out[1] = rhs;
    out[2] = lhs - rhs;
  });
  r.expect_close("dh/dt vs tr J(HX + sqrt(t) N)/2 (atoms, paired draws)", stats[0].mean(), stats[1].mean(),
                 3.0 * stats[2].se());
  r.note("paired difference " + fmt(stats[2].mean()) + " +- " + fmt(stats[2].se()));
  return r;
}

namespace {

struct MultiuserAll {
  std::vector<MultiuserResult> per_user;
  McEstimate sum_lhs_minus_common;  // sum_k dI/dsnr_k - dI/dsnr (common snr only)
  McEstimate sum_rhs_minus_half_mmse;
  double common_derivative = 0.0;
};

MultiuserAll multiuser_all(const VectorChannelModel& m, double delta_fd, const McConfig& mc) {
  const Eigen::Index K = m.K();
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(m.snr()(k) > 0.0)) throw std::invalid_argument("multiuser_derivative: every snr_k must be > 0");
  }
  const bool common = m.has_common_snr();
  std::vector<Stencil> st;
  std::vector<std::vector<VectorChannelModel>> shifted(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    st.push_back(stencil(m.snr()(k), fd_step(delta_fd, m.snr()(k))));
    for (double v : st.back().at) {
      Eigen::VectorXd snr = m.snr();
      snr(k) = v;
      shifted[static_cast<std::size_t>(k)].push_back(m.with_snr(snr));
    }
  }
  Stencil st_common;
  std::vector<VectorChannelModel> shifted_common;
  if (common) {
    st_common = stencil(m.common_snr(), fd_step(delta_fd, m.common_snr()));
    for (double v : st_common.at) shifted_common.push_back(m.with_common_snr(v));
  }
  const Eigen::MatrixXd G = m.H().transpose() * m.H();
  auto rhs_of = [&](const Eigen::MatrixXd& cov, Eigen::Index k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < K; ++i) acc += std::sqrt(m.snr()(i) / m.snr()(k)) * G(k, i) * cov(k, i);
    return 0.5 * acc;
  };

  MultiuserAll out;
  out.per_user.resize(static_cast<std::size_t>(K));
  if (m.is_gaussian()) {
    const Eigen::MatrixXd cov = gaussian_error_covariance(m);
    double sum_lhs = 0.0, sum_rhs = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      double lhs = 0.0;
      for (std::size_t p = 0; p < st[kk].at.size(); ++p) lhs += st[kk].weight[p] * gaussian_mi(shifted[kk][p]);
      const double rhs = rhs_of(cov, k);
      out.per_user[kk] = {{lhs, 0.0, 0}, {rhs, 0.0, 0}, {lhs - rhs, 0.0, 0}};
      sum_lhs += lhs;
      sum_rhs += rhs;
    }
    if (common) {
      double d = 0.0;
      for (std::size_t p = 0; p < st_common.at.size(); ++p) d += st_common.weight[p] * gaussian_mi(shifted_common[p]);
      out.common_derivative = d;
      out.sum_lhs_minus_common = {sum_lhs - d, 0.0, 0};
      out.sum_rhs_minus_half_mmse = {sum_rhs - 0.5 * gaussian_mmse(m), 0.0, 0};
    }
    return out;
  }

  const AtomKernel kernel(atoms_of(m), K);
  std::vector<std::vector<Eigen::MatrixXd>> AXs(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k)
    for (const auto& sm : shifted[static_cast<std::size_t>(k)]) AXs[static_cast<std::size_t>(k)].push_back(sm.gain() * kernel.points());
  std::vector<Eigen::MatrixXd> AXc;
  for (const auto& sm : shifted_common) AXc.push_back(sm.gain() * kernel.points());
  const Eigen::MatrixXd AX = m.gain() * kernel.points();
  const auto nK = static_cast<std::size_t>(K);
  // Layout: per user (lhs, rhs, diff), then sum-lhs-minus-common, sum-rhs-minus-half-mmse, common derivative.
  auto stats = atom_mc(kernel, m.L(), 3 * nK + 3, mc, [&](Eigen::Index j, const Eigen::VectorXd& n, AtomKernel::Posterior& post, double* s) {
    kernel.evaluate(AX, AX.col(j) + n, post);
    const Eigen::MatrixXd cov = post.cov;
    const double half_mmse = 0.5 * (m.H() * cov * m.H().transpose()).trace();
    double sum_lhs = 0.0, sum_rhs = 0.0;
    for (std::size_t k = 0; k < nK; ++k) {
      double lhs = 0.0;
      for (std::size_t p = 0; p < AXs[k].size(); ++p) {
        kernel.evaluate(AXs[k][p], AXs[k][p].col(j) + n, post);
        lhs += st[k].weight[p] * post.divergence;
      }
      const double rhs = rhs_of(cov, static_cast<Eigen::Index>(k));
      s[3 * k] = lhs;
      s[3 * k + 1] = rhs;
      s[3 * k + 2] = lhs - rhs;
      sum_lhs += lhs;
      sum_rhs += rhs;
    }
    s[3 * nK] = s[3 * nK + 1] = s[3 * nK + 2] = 0.0;
    if (common) {
      double d = 0.0;
      for (std::size_t p = 0; p < AXc.size(); ++p) {
        kernel.evaluate(AXc[p], AXc[p].col(j) + n, post);
        d += st_common.weight[p] * post.divergence;
      }
      s[3 * nK] = sum_lhs - d;
      s[3 * nK + 1] = sum_rhs - half_mmse;
      s[3 * nK + 2] = d;
    }
  });
  auto est = [](const Stats& x) { return McEstimate{x.mean(), x.se(), x.count()}; };
  for (std::size_t k = 0; k < nK; ++k) out.per_user[k] = {est(stats[3 * k]), est(stats[3 * k + 1]), est(stats[3 * k + 2])};
  if (common) {
    out.sum_lhs_minus_common = est(stats[3 * nK]);
    out.sum_rhs_minus_half_mmse = est(stats[3 * nK + 1]);
    out.common_derivative = stats[3 * nK + 2].mean();
  }
  return out;
}

}  // namespace

MultiuserResult multiuser_derivative(const VectorChannelModel& m, Eigen::Index k, double delta_fd, const McConfig& mc) {
  if (k < 0 || k >= m.K()) throw std::invalid_argument("multiuser_derivative: user index out of range");
  return multiuser_all(m, delta_fd, mc).per_user[static_cast<std::size_t>(k)];
}

Report multiuser_check(const VectorChannelModel& m, double delta_fd, const McConfig& mc, double tolerance) {
  const MultiuserAll all = multiuser_all(m, delta_fd, mc);
  Report r;
  r.suite = "multiuser";
  for (std::size_t k = 0; k < all.per_user.size(); ++k) {
    const auto& u = all.per_user[k];
    r.expect_close("dI/dsnr_" + std::to_string(k) + " vs conditional-covariance sum", u.lhs.value, u.rhs.value,
                   tolerance + 3.0 * u.difference.se);
  }
  if (m.has_common_snr()) {
    r.expect_close("sum_k dI/dsnr_k vs dI/dsnr", all.sum_lhs_minus_common.value, 0.0,
                   tolerance + 3.0 * all.sum_lhs_minus_common.se);
    r.expect_close("sum_k right-hand sides vs mmse/2", all.sum_rhs_minus_half_mmse.value, 0.0,
                   tolerance + 3.0 * all.sum_rhs_minus_half_mmse.se);
  }
  return r;
}

double log_likelihood_ratio(const VectorChannelModel& m, const Eigen::VectorXd& y) {
  if (y.size() != m.L()) throw std::invalid_argument("log_likelihood_ratio: y must have length L");
  if (m.is_gaussian()) {
    Eigen::MatrixXd C;
    const auto llt = output_factor(m, &C);
    const Eigen::VectorXd r = y - m.gain() * gaussian_of(m).mean;
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * r.dot(llt.solve(r)) - 0.5 * logdet + 0.5 * y.squaredNorm();
  }
  const auto& a = atoms_of(m);
  const Eigen::MatrixXd A = m.gain();
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(a.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const Eigen::VectorXd z = A * a.points[i];
    terms[i] = (a.probs[i] > 0.0 ? std::log(a.probs[i]) : -std::numeric_limits<double>::infinity()) + z.dot(y) -
               0.5 * z.squaredNorm();
    mx = std::max(mx, terms[i]);
  }
  double s = 0.0;
  for (double v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

Report likelihood_lemmas_check(const VectorChannelModel& m, const Eigen::VectorXd& y, double grad_tolerance,
                               double laplacian_tolerance) {
  const Eigen::Index L = m.L();
  if (y.size() != L) throw std::invalid_argument("likelihood_lemmas_check: y must have length L");
  // Posterior moments of Z = H S X given Y = y.
  Eigen::VectorXd ez;
  double ez2 = 0.0;
  if (m.is_gaussian()) {
    Eigen::MatrixXd C;
    const auto llt = output_factor(m, &C);
    const Eigen::VectorXd mu = m.gain() * gaussian_of(m).mean;
    ez = mu + C * llt.solve(y - mu);
    const Eigen::MatrixXd cov = C - C * llt.solve(C);
    ez2 = ez.squaredNorm() + cov.trace();
  } else {
    const AtomKernel kernel(atoms_of(m), m.K());
    const Eigen::MatrixXd AX = m.gain() * kernel.points();
    AtomKernel::Posterior post;
    kernel.evaluate(AX, y, post);
    ez = AX * post.weights;
    ez2 = 0.0;
    for (Eigen::Index i = 0; i < AX.cols(); ++i) ez2 += post.weights(i) * AX.col(i).squaredNorm();
  }
  const double h = 1e-4 * (1.0 + y.norm());
  const double f0 = log_likelihood_ratio(m, y);
  Eigen::VectorXd grad(L);
  double lap_log = 0.0;
  double lap_ratio = 0.0;
  for (Eigen::Index d = 0; d < L; ++d) {
    Eigen::VectorXd yp = y, ym = y;
    yp(d) += h;
    ym(d) -= h;
    const double fp = log_likelihood_ratio(m, yp);
    const double fm = log_likelihood_ratio(m, ym);
    grad(d) = (fp - fm) / (2.0 * h);
    lap_log += (fp - 2.0 * f0 + fm) / (h * h);
    lap_ratio += (std::expm1(fp - f0) + std::expm1(fm - f0)) / (h * h);
  }
  Report r;
  r.suite = "likelihood_lemmas";
  for (Eigen::Index d = 0; d < L; ++d)
    r.expect_close("grad log l vs E[Z|y], component " + std::to_string(d), grad(d), ez(d), grad_tolerance);
  r.expect_close("laplacian log l vs E[|Z|^2|y] - |E[Z|y]|^2", lap_log, ez2 - ez.squaredNorm(), laplacian_tolerance);
  r.expect_close("laplacian l / l vs E[|Z|^2|y]", lap_ratio, ez2, laplacian_tolerance * std::max(1.0, ez2));
  return r;
}

}  // namespace immse
