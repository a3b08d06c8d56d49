#include "immse/scalar_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "immse/error.hpp"

namespace immse {

namespace {

const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

// log cosh without cancellation for small or large arguments.
double log_cosh(double x) {
  const double a = std::abs(x);
  if (a < 1.0) {
    const double sh = std::sinh(0.5 * a);
    return std::log1p(2.0 * sh * sh);
  }
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// E f(N), N ~ N(0, 1), by adaptive Gauss-Kronrod on [-12, 12] with an extra
// breakpoint where the integrand changes regime.
double expect_standard_normal(const RealFunction& f, double feature) {
  std::vector<double> pts{-12.0, 12.0};
  if (feature > -12.0 && feature < 12.0) pts.insert(pts.begin() + 1, feature);
  AdaptiveOptions opts;
  opts.abs_tol = 1e-15;
  opts.rel_tol = 1e-14;
  opts.max_intervals = 4000;
  return integrate_adaptive(
             [&](double n) { return f(n) * std::exp(-0.5 * n * n) / std::sqrt(2.0 * std::numbers::pi); }, pts, opts)
      .value;
}

// I for atoms as a sum of per-atom divergences:
// -sum_k p_k E log sum_j p_j exp(t d_jk n - t^2 d_jk^2 / 2), d_jk = x_j - x_k.
double atoms_mutual_information(const DiscreteAtoms& d, double snr, const QuadratureSpec& quad) {
  const double t = std::sqrt(snr);
  double psum = 0.0;
  for (double p : d.probs) psum += p;
  const InputLaw law(d);
  auto inner = [&](std::size_t k, double y) {
    const double xk = d.values[k];
    const double n = y - t * xk;
    double maxabs = 0.0;
    for (std::size_t j = 0; j < d.values.size(); ++j) {
      if (d.probs[j] == 0.0) continue;
      const double dd = t * (d.values[j] - xk);
      maxabs = std::max(maxabs, std::abs(dd * n - 0.5 * dd * dd));
    }
    if (maxabs < 0.5) {
      double acc = psum - 1.0;
      for (std::size_t j = 0; j < d.values.size(); ++j) {
        const double dd = t * (d.values[j] - xk);
        acc += d.probs[j] * std::expm1(dd * n - 0.5 * dd * dd);
      }
      return -std::log1p(acc);
    }
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> a(d.values.size());
    for (std::size_t j = 0; j < d.values.size(); ++j) {
      const double dd = t * (d.values[j] - xk);
      a[j] = (d.probs[j] > 0.0 ? std::log(d.probs[j]) : -std::numeric_limits<double>::infinity()) + dd * n - 0.5 * dd * dd;
      m = std::max(m, a[j]);
    }
    double s = 0.0;
    for (double v : a) s += std::exp(v - m);
    return -(m + std::log(s));
  };
  return std::max(0.0, integrate_output_components(inner, law, snr, quad));
}

}  // namespace

ScalarChannel::ScalarChannel(InputLaw l, double s, QuadratureSpec q) : law(std::move(l)), snr(s), quad(q) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::invalid_argument("ScalarChannel: snr must be finite and >= 0");
  quad.validate();
}

double q_moment(const ScalarChannel& ch, double y, int i) { return q_moment(ch.law, ch.snr, y, i); }

double conditional_mean(const ScalarChannel& ch, double y) { return posterior_at(ch.law, ch.snr, y).mean; }

double mmse(const ScalarChannel& ch) {
  if (ch.snr == 0.0) return moments(ch.law).variance;
  return integrate_output([&](double y) { return posterior_at(ch.law, ch.snr, y).variance; }, ch.law, ch.snr,
                          ch.quad);
}

double mutual_information(const ScalarChannel& ch) {
  if (ch.snr == 0.0) return 0.0;
  if (ch.law.is_discrete()) return atoms_mutual_information(std::get<DiscreteAtoms>(ch.law.variant()), ch.snr, ch.quad);
  const double hy = integrate_output([&](double y) { return -posterior_at(ch.law, ch.snr, y).log_density; }, ch.law,
                                     ch.snr, ch.quad);
  return std::max(0.0, hy - kHalfLog2PiE);
}

double mmse_binary_closed(double snr) {
  if (!(snr >= 0.0)) throw std::invalid_argument("mmse_binary_closed: snr must be >= 0");
  if (snr == 0.0) return 1.0;
  const double t = std::sqrt(snr);
  // 1 - tanh(u) = 2 / (1 + exp(2u)), u = snr + sqrt(snr) n.
  return expect_standard_normal([&](double n) { return 2.0 / (1.0 + std::exp(2.0 * (snr + t * n))); }, -t);
}

double mi_binary_closed(double snr) {
  if (!(snr >= 0.0)) throw std::invalid_argument("mi_binary_closed: snr must be >= 0");
  if (snr == 0.0) return 0.0;
  const double t = std::sqrt(snr);
  return snr - expect_standard_normal([&](double n) { return log_cosh(snr + t * n); }, -t);
}

double mmse_gaussian_closed(double variance, double snr) { return variance / (1.0 + snr * variance); }

double mi_gaussian_closed(double variance, double snr) { return 0.5 * std::log1p(snr * variance); }

double score(const ScalarChannel& ch, double y) { return std::sqrt(ch.snr) * conditional_mean(ch, y) - y; }

double fisher_information(const ScalarChannel& ch) { return 1.0 - ch.snr * mmse(ch); }

double fisher_information_direct(const ScalarChannel& ch) {
  return integrate_output(
      [&](double y) {
        const double s = score(ch, y);
        return s * s;
      },
      ch.law, ch.snr, ch.quad);
}

double fd_step(double delta, double snr) {
  if (!(delta > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  return delta * std::max(1.0, snr);
}

QuadratureSpec fd_quadrature(const QuadratureSpec& base) {
  QuadratureSpec q = base;
  q.adaptive_tol = std::min(base.adaptive_tol, 1e-13);
  return q;
}

namespace {

// dF/ds by a second-order stencil: central where possible, one-sided at 0.
double derivative(const std::function<double(double)>& F, double s, double h) {
  if (s - h >= 0.0) return (F(s + h) - F(s - h)) / (2.0 * h);
  return (-3.0 * F(s) + 4.0 * F(s + h) - F(s + 2.0 * h)) / (2.0 * h);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Report verify_immse(const InputLaw& law, std::span<const double> snr_grid, double delta_fd, double tolerance,
                    const QuadratureSpec& quad) {
  const QuadratureSpec q = fd_quadrature(quad);
  Report r;
  r.suite = "immse";
  auto I = [&](double s) { return mutual_information(ScalarChannel(law, s, q)); };
  for (double s : snr_grid) {
    if (!(s >= 0.0)) throw std::invalid_argument("verify_immse: snr must be >= 0");
    const double h = fd_step(delta_fd, s);
    r.expect_close("dI/dsnr vs mmse/2 at snr=" + fmt(s), derivative(I, s, h), 0.5 * mmse(ScalarChannel(law, s, q)),
                   tolerance);
  }
  return r;
}

Report verify_integral_form(const InputLaw& law, double snr, std::size_t points, double adaptive_tolerance,
                            double trapezoid_tolerance, const QuadratureSpec& quad) {
  if (!(snr > 0.0) || points < 2) throw std::invalid_argument("verify_integral_form: need snr > 0 and >= 2 points");
  Report r;
  r.suite = "immse_integral";
  const double lhs = mutual_information(ScalarChannel(law, snr, quad));
  auto m = [&](double s) { return mmse(ScalarChannel(law, s, quad)); };
  AdaptiveOptions opts;
  opts.abs_tol = 1e-10;
  opts.rel_tol = 1e-12;
  const double adaptive = 0.5 * integrate_adaptive(m, 0.0, snr, opts).value;
  r.expect_close("I vs adaptive integral of mmse/2 at snr=" + fmt(snr), lhs, adaptive, adaptive_tolerance);
  const double h = snr / static_cast<double>(points - 1);
  double trap = 0.5 * (m(0.0) + m(snr));
  for (std::size_t i = 1; i + 1 < points; ++i) trap += m(h * static_cast<double>(i));
  r.expect_close("I vs trapezoid integral of mmse/2 (" + std::to_string(points) + " points)", lhs, 0.5 * h * trap,
                 trapezoid_tolerance);
  return r;
}

IncrementalPair incremental_decompose(double snr, double delta) {
  if (!(snr > 0.0) || !(delta > 0.0)) throw std::invalid_argument("incremental_decompose: snr and delta must be > 0");
  IncrementalPair p;
  p.snr = snr;
  p.delta = delta;
  p.sigma1_sq = 1.0 / (snr + delta);
  p.sigma2_sq = 1.0 / snr - p.sigma1_sq;
  return p;
}

Report incremental_channel_check(const InputLaw& law, const IncrementalPair& pair, std::size_t n, std::uint64_t seed,
                                 double min_pvalue) {
  Report r;
  r.suite = "incremental_channel";
  r.expect_close("sigma1^2 = 1/(snr+delta)", pair.sigma1_sq, 1.0 / (pair.snr + pair.delta), 1e-15 * pair.sigma1_sq);
  r.expect_close("sigma1^2 + sigma2^2 = 1/snr", pair.sigma1_sq + pair.sigma2_sq, 1.0 / pair.snr,
                 4.0 * std::numeric_limits<double>::epsilon() / pair.snr);
  const auto x_cascade = sample(law, substream_seed(seed, 1), n);
  const auto x_direct = sample(law, substream_seed(seed, 2), n);
  Engine e1 = make_engine(seed, 3);
  Engine e2 = make_engine(seed, 4);
  boost::random::normal_distribution<double> normal;
  const double s1 = std::sqrt(pair.sigma1_sq);
  const double s2 = std::sqrt(pair.sigma2_sq);
  const double sd = 1.0 / std::sqrt(pair.snr);
  std::vector<double> y2(n), yd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y1 = x_cascade[i] + s1 * normal(e1);
    y2[i] = y1 + s2 * normal(e1);
    yd[i] = x_direct[i] + sd * normal(e2);
  }
  const double d = ks_statistic(y2, yd);
  const double p = ks_pvalue(d, n, n);
  r.expect_less_equal("KS p-value of cascade vs direct output", min_pvalue, p);
  r.note("KS statistic " + fmt(d) + " with " + std::to_string(n) + " samples per arm");
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    f.max_residual = std::max(f.max_residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
  return f;
}

Report lemma1_low_snr(const InputLaw& law, std::span<const double> deltas, const QuadratureSpec& quad) {
  if (deltas.size() < 2) throw std::invalid_argument("lemma1_low_snr: need at least two deltas");
  const double var = moments(law).variance;
  const QuadratureSpec q = fd_quadrature(quad);
  Report r;
  r.suite = "low_snr_slope";
  std::vector<double> lx, ly;
  double smallest = deltas[0];
  double ratio_at_smallest = 0.0;
  for (double d : deltas) {
    if (!(d > 0.0)) throw std::invalid_argument("lemma1_low_snr: deltas must be > 0");
    const double I = mutual_information(ScalarChannel(law, d, q));
    r.expect_less_equal("I(delta) <= delta Var/2 at delta=" + fmt(d), I, 0.5 * var * d, 1e-15);
    const double deficiency = 0.5 * var * d - I;
    if (deficiency > 0.0) {
      lx.push_back(std::log(d));
      ly.push_back(std::log(deficiency));
    }
    if (d <= smallest) {
      smallest = d;
      ratio_at_smallest = I / d;
    }
  }
  r.expect_close("I(delta)/delta -> Var/2 at delta=" + fmt(smallest), ratio_at_smallest, 0.5 * var, 0.005 * var);
  if (lx.size() >= 2) {
    const LineFit f = fit_line(lx, ly);
    r.expect_close("log-log slope of Var delta/2 - I(delta)", f.slope, 2.0, 0.1);
  }
  return r;
}

McEstimate divergence_derivative(const InputLaw& law, double x, double snr, const McConfig& mc,
                                 bool sample_retrochannel) {
  if (!(snr > 0.0)) throw std::invalid_argument("divergence_derivative: snr must be > 0");
  mc.validate();
  const double t = std::sqrt(snr);
  auto stats = mc_blocks(mc.seed, mc.paths, mc.resolved_threads(), [&](Engine& eng, std::size_t count) {
    boost::random::normal_distribution<double> normal;
    std::vector<Stats> s(1);
    for (std::size_t i = 0; i < count; ++i) {
      const double n = normal(eng);
      const double y = t * x + n;
      if (sample_retrochannel) {
        const double xp = sample_posterior(law, snr, y, eng);
        s[0].add(0.5 * (x - xp) * (x - xp) - xp * n / (2.0 * t));
      } else {
        const PosteriorStats p = posterior_at(law, snr, y);
        s[0].add(0.5 * ((x - p.mean) * (x - p.mean) + p.variance) - p.mean * n / (2.0 * t));
      }
    }
    return s;
  });
  return {stats[0].mean(), stats[0].se(), stats[0].count()};
}

McEstimate averaged_divergence_derivative(const InputLaw& law, double snr, const McConfig& mc,
                                          bool sample_retrochannel) {
  if (!(snr > 0.0)) throw std::invalid_argument("averaged_divergence_derivative: snr must be > 0");
  mc.validate();
  const double t = std::sqrt(snr);
  const Sampler draw(law);
  auto stats = mc_blocks(mc.seed, mc.paths, mc.resolved_threads(), [&](Engine& eng, std::size_t count) {
    boost::random::normal_distribution<double> normal;
    std::vector<Stats> s(1);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = draw(eng);
      const double n = normal(eng);
      const double y = t * x + n;
      if (sample_retrochannel) {
        const double xp = sample_posterior(law, snr, y, eng);
        s[0].add(0.5 * (x - xp) * (x - xp) - xp * n / (2.0 * t));
      } else {
        const PosteriorStats p = posterior_at(law, snr, y);
        s[0].add(0.5 * ((x - p.mean) * (x - p.mean) + p.variance) - p.mean * n / (2.0 * t));
      }
    }
    return s;
  });
  return {stats[0].mean(), stats[0].se(), stats[0].count()};
}

namespace {

void require_standardized(const Moments& m) {
  if (std::abs(m.mean) > 1e-9 || std::abs(m.variance - 1.0) > 1e-9)
    throw std::invalid_argument("low-snr expansion needs zero-mean unit-variance moments");
}

}  // namespace

double taylor_coefficient(const Moments& m) {
  require_standardized(m);
  return m.m4 * m.m4 - 6.0 * m.m4 - 2.0 * m.m3 * m.m3 + 15.0;
}

double mmse_taylor(const Moments& m, double snr) {
  const double c = taylor_coefficient(m);
  return 1.0 - snr + snr * snr - c / 6.0 * snr * snr * snr;
}

double mi_taylor(const Moments& m, double snr) {
  const double c = taylor_coefficient(m);
  const double s2 = snr * snr;
  return 0.5 * snr - 0.25 * s2 + s2 * snr / 6.0 - c / 48.0 * s2 * s2;
}

Report taylor_order_check(const InputLaw& law, std::span<const double> snr_grid, double min_mmse_slope,
                          double min_mi_slope, const QuadratureSpec& quad) {
  const Moments m = moments(law);
  require_standardized(m);
  QuadratureSpec q = quad;
  q.adaptive_tol = std::min(q.adaptive_tol, 1e-15);
  std::vector<double> ls, lm, li;
  for (double s : snr_grid) {
    if (!(s > 0.0)) throw std::invalid_argument("taylor_order_check: snr must be > 0");
    const ScalarChannel ch(law, s, q);
    ls.push_back(std::log(s));
    lm.push_back(std::log(std::abs(mmse(ch) - mmse_taylor(m, s))));
    li.push_back(std::log(std::abs(mutual_information(ch) - mi_taylor(m, s))));
  }
  Report r;
  r.suite = "taylor";
  r.expect_less_equal("mmse remainder log-log slope >= " + fmt(min_mmse_slope), min_mmse_slope, fit_line(ls, lm).slope);
  r.expect_less_equal("I remainder log-log slope >= " + fmt(min_mi_slope), min_mi_slope, fit_line(ls, li).slope);
  return r;
}

Report preprocessor_derivative(const InputLaw& law_x, double noise_var, double snr, double delta_fd, double tolerance,
                               const QuadratureSpec& quad) {
  if (!(noise_var >= 0.0)) throw std::invalid_argument("preprocessor_derivative: noise variance must be >= 0");
  if (!(snr >= 0.0)) throw std::invalid_argument("preprocessor_derivative: snr must be >= 0");
  const QuadratureSpec q = fd_quadrature(quad);
  const InputLaw law_z = add_gaussian_noise(law_x, noise_var);
  auto I = [&](double s) { return mutual_information(ScalarChannel(law_z, s, q)) - 0.5 * std::log1p(s * noise_var); };
  const double h = fd_step(delta_fd, snr);
  const double lhs = derivative(I, snr, h);
  const double mmse_z = mmse(ScalarChannel(law_z, snr, q));
  const double mmse_zx = noise_var / (1.0 + snr * noise_var);
  const double rhs = 0.5 * (mmse_z - mmse_zx);
  Report r;
  r.suite = "preprocessor";
  r.expect_close("dI(X;Y)/dsnr vs (mmse(Z|Y) - mmse(Z|Y,X))/2", lhs, rhs, tolerance);
  if (const auto* g = std::get_if<Gaussian>(&law_x.variant())) {
    const double vx = g->variance;
    auto closed_I = [&](double s) { return 0.5 * std::log1p(s * vx / (1.0 + s * noise_var)); };
    const double closed_rhs = 0.5 * ((vx + noise_var) / (1.0 + snr * (vx + noise_var)) - mmse_zx);
    r.expect_close("closed-form derivative vs closed-form mmse difference", derivative(closed_I, snr, h), closed_rhs,
                   tolerance);
    r.expect_close("engine I(X;Y) vs closed form", I(snr), closed_I(snr), tolerance);
    r.expect_close("engine mmse difference vs closed form", rhs, closed_rhs, tolerance);
  }
  return r;
}

DecayFit high_snr_decay(std::span<const double> snr_grid) {
  if (snr_grid.size() < 2) throw std::invalid_argument("high_snr_decay: need at least two points");
  DecayFit out;
  std::vector<double> s, lb, ls, lg;
  out.binary_decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double v : snr_grid) {
    if (!(v > 0.0)) throw std::invalid_argument("high_snr_decay: snr must be > 0");
    const double m = mmse_binary_closed(v);
    if (!(m > 0.0) || !(m < prev)) out.binary_decreasing = false;
    prev = m;
    s.push_back(v);
    lb.push_back(std::log(m));
    ls.push_back(std::log(v));
    lg.push_back(std::log(mmse_gaussian_closed(1.0, v)));
  }
  out.binary = fit_line(s, lb);
  out.gaussian = fit_line(ls, lg);
  return out;
}

}  // namespace immse
