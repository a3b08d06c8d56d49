#include "immse/input_law.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "immse/random.hpp"

namespace immse {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kInf = std::numeric_limits<double>::infinity();
// Noise standard deviations kept when integrating over x for gridded laws.
constexpr double kGridNoiseWindow = 9.0;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_probabilities(const std::vector<double>& p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1 within 1e-12");
}

double trapezoid_mass(const GriddedDensity& g) {
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < g.grid.size(); ++i) mass += 0.5 * (g.pdf[i] + g.pdf[i + 1]) * (g.grid[i + 1] - g.grid[i]);
  return mass;
}

void validate_and_normalize(GriddedDensity& g, bool require_unit_mass) {
  if (g.grid.size() < 2 || g.grid.size() != g.pdf.size()) throw std::invalid_argument("GriddedDensity: need >= 2 points and matching pdf length");
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    if (!std::isfinite(g.grid[i]) || !(g.pdf[i] >= 0.0) || !std::isfinite(g.pdf[i])) throw std::invalid_argument("GriddedDensity: non-finite grid or negative pdf");
    if (i > 0 && !(g.grid[i] > g.grid[i - 1])) throw std::invalid_argument("GriddedDensity: grid must be strictly increasing");
  }
  const double mass = trapezoid_mass(g);
  if (!(mass > 0.0)) throw std::invalid_argument("GriddedDensity: zero total mass");
  if (require_unit_mass && std::abs(mass - 1.0) > 1e-8) throw std::invalid_argument("GriddedDensity: pdf must integrate to 1 within 1e-8");
  for (double& p : g.pdf) p /= mass;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Raw moments E[X^i], i = 0..n, of N(m, v).
std::vector<double> normal_raw_moments(double m, double v, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  out[0] = 1.0;
  if (n >= 1) out[1] = m;
  for (int i = 2; i <= n; ++i) out[i] = m * out[i - 1] + (i - 1) * v * out[i - 2];
  return out;
}

// Integral of w(x) p(x) phi(y - t x) dx for the piecewise-linear density.
template <class W>
double gridded_integral(const GriddedDensity& g, double t, double y, W&& w) {
  double lo = g.grid.front();
  double hi = g.grid.back();
  double panel = kInf;
  if (t > 0.0) {
    lo = std::max(lo, (y - kGridNoiseWindow) / t);
    hi = std::min(hi, (y + kGridNoiseWindow) / t);
    panel = 0.5 / t;
  }
  if (!(hi > lo)) return 0.0;
  double acc = 0.0;
  const auto first = std::upper_bound(g.grid.begin(), g.grid.end(), lo) - g.grid.begin();
  std::size_t seg = first == 0 ? 0 : static_cast<std::size_t>(first - 1);
  for (; seg + 1 < g.grid.size() && g.grid[seg] < hi; ++seg) {
    const double a = std::max(lo, g.grid[seg]);
    const double b = std::min(hi, g.grid[seg + 1]);
    if (!(b > a)) continue;
    const double x0 = g.grid[seg];
    const double slope = (g.pdf[seg + 1] - g.pdf[seg]) / (g.grid[seg + 1] - x0);
    const double p0 = g.pdf[seg];
    const int pieces = std::isfinite(panel) ? std::max(1, static_cast<int>(std::ceil((b - a) / panel))) : 1;
    const double h = (b - a) / pieces;
    for (int k = 0; k < pieces; ++k) {
      acc += gauss_legendre10(
          [&](double x) {
            const double z = y - t * x;
            return w(x) * (p0 + slope * (x - x0)) * std::exp(-0.5 * z * z - kLogSqrt2Pi);
          },
          a + k * h, a + (k + 1) * h);
    }
  }
  return acc;
}

PosteriorStats posterior_atoms(const DiscreteAtoms& d, double t, double y) {
  const std::size_t n = d.values.size();
  std::vector<double> logw(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double z = y - t * d.values[j];
    logw[j] = (d.probs[j] > 0.0 ? std::log(d.probs[j]) : -kInf) - 0.5 * z * z;
  }
  const double lse = log_sum_exp(logw);
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) mean += std::exp(logw[j] - lse) * d.values[j];
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = d.values[j] - mean;
    var += std::exp(logw[j] - lse) * r * r;
  }
  return {lse - kLogSqrt2Pi, mean, var};
}

PosteriorStats posterior_mixture(const std::vector<MixtureComponent>& comps, double snr, double y) {
  const double t = std::sqrt(snr);
  const std::size_t n = comps.size();
  std::vector<double> logw(n), pm(n), pv(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& c = comps[k];
    const double ov = 1.0 + snr * c.variance;
    const double r = y - t * c.mean;
    logw[k] = std::log(c.weight) - 0.5 * r * r / ov - 0.5 * std::log(ov) - kLogSqrt2Pi;
    pm[k] = c.mean + t * c.variance * r / ov;
    pv[k] = c.variance / ov;
  }
  const double lse = log_sum_exp(logw);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += std::exp(logw[k] - lse) * pm[k];
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = pm[k] - mean;
    var += std::exp(logw[k] - lse) * (pv[k] + d * d);
  }
  return {lse, mean, var};
}

// Boundary data for partial moments of the standard normal: phi(z) and the
// tail probability on the side of zero where z lies (accurate in both tails).
struct NormalPoint {
  double z;
  double pdf;
  double tail;  // P(Z > z) for z >= 0, P(Z < z) for z < 0
};

NormalPoint normal_point(double z) {
  return {z, std::exp(-0.5 * z * z - kLogSqrt2Pi), 0.5 * std::erfc(std::abs(z) / std::numbers::sqrt2)};
}

// int_a^b z^k phi(z) dz for k = 0..3.
std::array<double, 4> normal_partial_moments(const NormalPoint& a, const NormalPoint& b) {
  double t0;
  if (a.z >= 0.0) {
    t0 = a.tail - b.tail;
  } else if (b.z <= 0.0) {
    t0 = b.tail - a.tail;
  } else {
    t0 = 1.0 - a.tail - b.tail;
  }
  const double t1 = a.pdf - b.pdf;
  return {t0, t1, t0 + a.z * a.pdf - b.z * b.pdf, 2.0 * t1 + a.z * a.z * a.pdf - b.z * b.z * b.pdf};
}

// Below this sqrt(snr) the closed form below loses digits (the kernel is
// nearly flat across the support and the z-moments cancel); the posterior is
// then integrated panel by panel with 7-point Gauss-Legendre pieces short
// enough that the kernel is resolved, accumulating moments about the center
// of the support.
constexpr double kClosedFormMinGain = 1.0;
constexpr double kClosedFormWindow = 12.0;

PosteriorStats posterior_gridded_panels(const GriddedDensity& g, double t, double y) {
  namespace bq = boost::math::quadrature;
  const auto& nodes = bq::gauss<double, 7>::abscissa();
  const auto& weights = bq::gauss<double, 7>::weights();
  double lo = g.grid.front(), hi = g.grid.back();
  if (t > 0.0) {
    lo = std::max(lo, (y - kClosedFormWindow) / t);
    hi = std::min(hi, (y + kClosedFormWindow) / t);
  }
  const double c = 0.5 * (g.grid.front() + g.grid.back());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  if (hi > lo) {
    const auto first = std::upper_bound(g.grid.begin(), g.grid.end(), lo) - g.grid.begin();
    for (std::size_t seg = first == 0 ? 0 : static_cast<std::size_t>(first - 1);
         seg + 1 < g.grid.size() && g.grid[seg] < hi; ++seg) {
      const double x0 = g.grid[seg];
      const double slope = (g.pdf[seg + 1] - g.pdf[seg]) / (g.grid[seg + 1] - x0);
      const double a = std::max(lo, x0);
      const double b = std::min(hi, g.grid[seg + 1]);
      if (!(b > a)) continue;
      const int pieces = std::max(1, static_cast<int>(std::ceil(t * (b - a) / 0.2)));
      const double h = (b - a) / pieces;
      for (int k = 0; k < pieces; ++k) {
        const double mid = a + (k + 0.5) * h;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          for (int sign : {-1, 1}) {
            if (i == 0 && sign == 1) continue;  // the 7-point rule has a node at 0
            const double x = mid + sign * 0.5 * h * nodes[i];
            const double z = y - t * x;
            const double w = 0.5 * h * weights[i] * (g.pdf[seg] + slope * (x - x0)) * std::exp(-0.5 * z * z);
            const double d = x - c;
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
          }
        }
      }
    }
  }
  if (!(s0 > 0.0)) {
    const double edge = (t > 0.0 && y / t > g.grid.back()) ? g.grid.back() : g.grid.front();
    return {-kInf, edge, 0.0};
  }
  const double md = s1 / s0;
  return {std::log(s0) - kLogSqrt2Pi, c + md, std::max(0.0, s2 / s0 - md * md)};
}

PosteriorStats posterior_gridded(const GriddedDensity& g, double snr, double y) {
  const double t = std::sqrt(snr);
  if (t < kClosedFormMinGain) return posterior_gridded_panels(g, t, y);
  // Given Y = y the kernel phi(y - t x) is a normal density in x with mean
  // m = y/t and sd s = 1/t; on each panel the density is linear in z = (x - m)/s.
  const double m = y / t;
  const double s = 1.0 / t;
  const double lo = m - kClosedFormWindow * s;
  const double hi = m + kClosedFormWindow * s;
  double z0 = 0.0, z1 = 0.0, z2 = 0.0;
  if (hi > g.grid.front() && lo < g.grid.back()) {
    const auto first = std::upper_bound(g.grid.begin(), g.grid.end(), lo) - g.grid.begin();
    std::size_t seg = first == 0 ? 0 : static_cast<std::size_t>(first - 1);
    NormalPoint left = normal_point((std::max(g.grid[seg], lo) - m) / s);
    for (; seg + 1 < g.grid.size() && g.grid[seg] < hi; ++seg) {
      const double x0 = g.grid[seg];
      const double x1 = g.grid[seg + 1];
      const NormalPoint right = normal_point((std::min(x1, hi) - m) / s);
      if (right.z > left.z) {
        const double slope = (g.pdf[seg + 1] - g.pdf[seg]) / (x1 - x0);
        const double ca = g.pdf[seg] + slope * (m - x0);
        const double cb = slope * s;
        const auto tk = normal_partial_moments(left, right);
        z0 += ca * tk[0] + cb * tk[1];
        z1 += ca * tk[1] + cb * tk[2];
        z2 += ca * tk[2] + cb * tk[3];
      }
      left = right;
    }
  }
  if (!(z0 > 0.0)) {
    // Far outside the support: the posterior collapses onto the nearest edge.
    const double edge = m > g.grid.back() ? g.grid.back() : g.grid.front();
    return {-kInf, edge, 0.0};
  }
  const double mz = z1 / z0;
  const double vz = std::max(0.0, z2 / z0 - mz * mz);
  return {std::log(s * z0), m + s * mz, s * s * vz};
}

std::vector<MixtureComponent> as_components(const InputLaw& law) {
  return std::visit(
      Overloaded{
          [](const DiscreteAtoms& d) {
            std::vector<MixtureComponent> c;
            for (std::size_t i = 0; i < d.values.size(); ++i) c.push_back({d.probs[i], d.values[i], 0.0});
            return c;
          },
          [](const Gaussian& g) { return std::vector<MixtureComponent>{{1.0, g.mean, g.variance}}; },
          [](const GaussianMixture& m) { return m.components; },
          [](const GriddedDensity&) -> std::vector<MixtureComponent> {
            throw std::invalid_argument("operation not supported for gridded densities");
          }},
      law.variant());
}

// E f(mean + sd Z): Gauss-Hermite at two orders; if they disagree, composite
// adaptive Gauss-Kronrod on the component window with breakpoints.
double component_expectation(const RealFunction& f, double mean, double sd, const QuadratureSpec& spec,
                             const std::vector<double>& features) {
  const auto& rule = gauss_hermite_rule(spec.hermite_order);
  const auto& coarse = gauss_hermite_rule(std::max(2, spec.hermite_order / 2 + 1));
  const double fine_est = expect_normal(f, rule, mean, sd);
  const double coarse_est = expect_normal(f, coarse, mean, sd);
  if (std::isfinite(fine_est) &&
      std::abs(fine_est - coarse_est) <= std::max(0.01 * spec.adaptive_tol, 1e-14 * std::abs(fine_est)))
    return fine_est;

  const double lo = mean - spec.y_cutoff * sd;
  const double hi = mean + spec.y_cutoff * sd;
  std::vector<double> pts{lo, hi};
  for (double x : features) {
    if (x > lo && x < hi) pts.push_back(x);
  }
  for (int k = -4; k <= 4; ++k) pts.push_back(mean + k * sd);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.erase(std::remove_if(pts.begin(), pts.end(), [&](double x) { return x < lo || x > hi; }), pts.end());
  const double inv = 1.0 / sd;
  auto integrand = [&](double y) {
    const double z = (y - mean) * inv;
    const double dens = std::exp(-0.5 * z * z - kLogSqrt2Pi) * inv;
    return dens == 0.0 ? 0.0 : f(y) * dens;
  };
  AdaptiveOptions opts;
  opts.abs_tol = 0.5 * spec.adaptive_tol;
  opts.rel_tol = 1e-14;
  opts.max_intervals = 20000;
  return integrate_adaptive(integrand, pts, opts).value;
}

}  // namespace

InputLaw::InputLaw(Variant v) : v_(std::move(v)) {
  std::visit(Overloaded{
                 [](DiscreteAtoms& d) {
                   if (d.values.empty() || d.values.size() != d.probs.size()) throw std::invalid_argument("DiscreteAtoms: need matching non-empty values/probs");
                   for (double x : d.values) {
                     if (!std::isfinite(x)) throw std::invalid_argument("DiscreteAtoms: non-finite atom");
                   }
                   check_probabilities(d.probs, "DiscreteAtoms");
                 },
                 [](Gaussian& g) {
                   if (!std::isfinite(g.mean) || !(g.variance > 0.0) || !std::isfinite(g.variance)) throw std::invalid_argument("Gaussian: variance must be positive");
                 },
                 [](GaussianMixture& m) {
                   if (m.components.empty()) throw std::invalid_argument("GaussianMixture: no components");
                   std::vector<double> w;
                   for (const auto& c : m.components) {
                     if (!std::isfinite(c.mean) || !(c.variance > 0.0) || !std::isfinite(c.variance)) throw std::invalid_argument("GaussianMixture: component variance must be positive");
                     w.push_back(c.weight);
                   }
                   check_probabilities(w, "GaussianMixture");
                 },
                 [](GriddedDensity& g) { validate_and_normalize(g, true); }},
             v_);
}

InputLaw InputLaw::binary() { return atoms({-1.0, 1.0}, {0.5, 0.5}); }

InputLaw InputLaw::atoms(std::vector<double> values, std::vector<double> probs) {
  return InputLaw(DiscreteAtoms{std::move(values), std::move(probs)});
}

InputLaw InputLaw::gaussian(double mean, double variance) { return InputLaw(Gaussian{mean, variance}); }

InputLaw InputLaw::mixture(std::vector<MixtureComponent> components) {
  return InputLaw(GaussianMixture{std::move(components)});
}

InputLaw InputLaw::gridded(std::vector<double> grid, std::vector<double> pdf) {
  return InputLaw(GriddedDensity{std::move(grid), std::move(pdf)});
}

InputLaw InputLaw::uniform_gridded(double lo, double hi, std::size_t points) {
  if (!(hi > lo) || points < 2) throw std::invalid_argument("uniform_gridded: need hi > lo and >= 2 points");
  std::vector<double> grid(points), pdf(points, 1.0 / (hi - lo));
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  grid.back() = hi;
  return gridded(std::move(grid), std::move(pdf));
}

std::string InputLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const DiscreteAtoms& d) {
                   os << "atoms[";
                   for (std::size_t i = 0; i < d.values.size(); ++i) os << (i ? ";" : "") << d.values[i] << "@" << d.probs[i];
                   os << "]";
                 },
                 [&](const Gaussian& g) { os << "gaussian(" << g.mean << "," << g.variance << ")"; },
                 [&](const GaussianMixture& m) {
                   os << "mixture[";
                   for (std::size_t i = 0; i < m.components.size(); ++i) {
                     const auto& c = m.components[i];
                     os << (i ? ";" : "") << c.weight << "," << c.mean << "," << c.variance;
                   }
                   os << "]";
                 },
                 [&](const GriddedDensity& g) {
                   os << "gridded(" << g.grid.size() << " points on [" << g.grid.front() << "," << g.grid.back() << "])";
                 }},
             v_);
  return os.str();
}

Moments moments(const InputLaw& law) {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  std::visit(Overloaded{
                 [&](const DiscreteAtoms& d) {
                   for (std::size_t i = 0; i < d.values.size(); ++i) {
                     const double x = d.values[i];
                     const double p = d.probs[i];
                     m1 += p * x;
                     m2 += p * x * x;
                     m3 += p * x * x * x;
                     m4 += p * x * x * x * x;
                   }
                 },
                 [&](const Gaussian& g) {
                   const auto r = normal_raw_moments(g.mean, g.variance, 4);
                   m1 = r[1], m2 = r[2], m3 = r[3], m4 = r[4];
                 },
                 [&](const GaussianMixture& m) {
                   for (const auto& c : m.components) {
                     const auto r = normal_raw_moments(c.mean, c.variance, 4);
                     m1 += c.weight * r[1];
                     m2 += c.weight * r[2];
                     m3 += c.weight * r[3];
                     m4 += c.weight * r[4];
                   }
                 },
                 [&](const GriddedDensity& g) {
                   // Exact for the piecewise-linear density (degree <= 5 per segment).
                   for (std::size_t i = 0; i + 1 < g.grid.size(); ++i) {
                     const double x0 = g.grid[i];
                     const double slope = (g.pdf[i + 1] - g.pdf[i]) / (g.grid[i + 1] - x0);
                     const double p0 = g.pdf[i];
                     auto seg = [&](int k) {
                       return gauss_legendre10([&](double x) { return std::pow(x, k) * (p0 + slope * (x - x0)); }, x0, g.grid[i + 1]);
                     };
                     m1 += seg(1);
                     m2 += seg(2);
                     m3 += seg(3);
                     m4 += seg(4);
                   }
                 }},
             law.variant());
  return {m1, std::max(0.0, m2 - m1 * m1), m3, m4};
}

Moments standardized(const Moments& m) {
  if (!(m.variance > 0.0)) throw std::invalid_argument("standardized: zero variance");
  const double mu = m.mean;
  const double m2 = m.variance + mu * mu;
  const double c3 = m.m3 - 3.0 * mu * m2 + 2.0 * mu * mu * mu;
  const double c4 = m.m4 - 4.0 * mu * m.m3 + 6.0 * mu * mu * m2 - 3.0 * mu * mu * mu * mu;
  const double sd = std::sqrt(m.variance);
  return {0.0, 1.0, c3 / (sd * sd * sd), c4 / (m.variance * m.variance)};
}

Sampler::Sampler(const InputLaw& law) : law_(law) {
  std::visit(Overloaded{
                 [&](const DiscreteAtoms& d) {
                   cdf_.resize(d.probs.size());
                   std::partial_sum(d.probs.begin(), d.probs.end(), cdf_.begin());
                 },
                 [&](const Gaussian&) {},
                 [&](const GaussianMixture& m) {
                   double acc = 0.0;
                   for (const auto& c : m.components) cdf_.push_back(acc += c.weight);
                 },
                 [&](const GriddedDensity& g) {
                   cdf_.assign(g.grid.size(), 0.0);
                   for (std::size_t i = 0; i + 1 < g.grid.size(); ++i)
                     cdf_[i + 1] = cdf_[i] + 0.5 * (g.pdf[i] + g.pdf[i + 1]) * (g.grid[i + 1] - g.grid[i]);
                 }},
             law_.variant());
}

double Sampler::operator()(Engine& eng) const {
  boost::random::uniform_01<double> unif;
  boost::random::normal_distribution<double> normal;
  auto pick = [&](double u) {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u * cdf_.back());
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
  };
  return std::visit(Overloaded{
                        [&](const DiscreteAtoms& d) { return d.values[pick(unif(eng))]; },
                        [&](const Gaussian& g) { return g.mean + std::sqrt(g.variance) * normal(eng); },
                        [&](const GaussianMixture& m) {
                          const auto& c = m.components[pick(unif(eng))];
                          return c.mean + std::sqrt(c.variance) * normal(eng);
                        },
                        [&](const GriddedDensity& g) {
                          // Inverse CDF; the CDF is quadratic inside each segment.
                          const double u = unif(eng) * cdf_.back();
                          auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
                          std::size_t seg = static_cast<std::size_t>(it - cdf_.begin());
                          seg = std::clamp<std::size_t>(seg, 1, g.grid.size() - 1) - 1;
                          const double r = u - cdf_[seg];
                          const double width = g.grid[seg + 1] - g.grid[seg];
                          const double pa = g.pdf[seg];
                          const double k = (g.pdf[seg + 1] - pa) / width;
                          const double denom = pa + std::sqrt(std::max(0.0, pa * pa + 2.0 * k * r));
                          const double d = denom > 0.0 ? 2.0 * r / denom : 0.0;
                          return g.grid[seg] + std::clamp(d, 0.0, width);
                        }},
                    law_.variant());
}

std::vector<double> sample(const InputLaw& law, std::uint64_t seed, std::size_t n) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  const Sampler draw(law);
  Engine eng = make_engine(seed, 0);
  std::vector<double> out(n);
  for (auto& x : out) x = draw(eng);
  return out;
}

std::vector<OutputComponent> output_components(const InputLaw& law, double snr) {
  if (!(snr >= 0.0)) throw std::invalid_argument("output_components: snr must be >= 0");
  const double t = std::sqrt(snr);
  std::vector<OutputComponent> out;
  for (const auto& c : as_components(law)) out.push_back({c.weight, t * c.mean, 1.0 + snr * c.variance});
  return out;
}

PosteriorStats posterior_at(const InputLaw& law, double snr, double y) {
  if (!(snr >= 0.0)) throw std::invalid_argument("posterior_at: snr must be >= 0");
  return std::visit(Overloaded{
                        [&](const DiscreteAtoms& d) { return posterior_atoms(d, std::sqrt(snr), y); },
                        [&](const Gaussian& g) { return posterior_mixture({{1.0, g.mean, g.variance}}, snr, y); },
                        [&](const GaussianMixture& m) { return posterior_mixture(m.components, snr, y); },
                        [&](const GriddedDensity& g) { return posterior_gridded(g, snr, y); }},
                    law.variant());
}

double sample_posterior(const InputLaw& law, double snr, double y, Engine& eng) {
  if (law.is_gridded()) throw std::invalid_argument("sample_posterior: gridded laws are not supported");
  const double t = std::sqrt(snr);
  const auto comps = as_components(law);
  std::vector<double> logw(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = comps[k];
    const double ov = 1.0 + snr * c.variance;
    const double r = y - t * c.mean;
    logw[k] = (c.weight > 0.0 ? std::log(c.weight) : -kInf) - 0.5 * r * r / ov - 0.5 * std::log(ov);
  }
  const double lse = log_sum_exp(logw);
  const double u = boost::random::uniform_01<double>()(eng);
  double acc = 0.0;
  std::size_t k = 0;
  for (; k + 1 < comps.size(); ++k) {
    acc += std::exp(logw[k] - lse);
    if (u < acc) break;
  }
  const auto& c = comps[k];
  if (c.variance == 0.0) return c.mean;
  const double ov = 1.0 + snr * c.variance;
  const double pm = c.mean + t * c.variance * (y - t * c.mean) / ov;
  return pm + std::sqrt(c.variance / ov) * boost::random::normal_distribution<double>()(eng);
}

double q_moment(const InputLaw& law, double snr, double y, int i) {
  if (i < 0) throw std::invalid_argument("q_moment: i must be >= 0");
  if (!(snr >= 0.0)) throw std::invalid_argument("q_moment: snr must be >= 0");
  const double t = std::sqrt(snr);
  return std::visit(Overloaded{
                        [&](const DiscreteAtoms& d) {
                          double acc = 0.0;
                          for (std::size_t j = 0; j < d.values.size(); ++j) {
                            const double z = y - t * d.values[j];
                            acc += d.probs[j] * std::pow(d.values[j], i) * std::exp(-0.5 * z * z - kLogSqrt2Pi);
                          }
                          return acc;
                        },
                        [&](const GriddedDensity& g) {
                          return gridded_integral(g, t, y, [i](double x) { return std::pow(x, i); });
                        },
                        [&](const auto&) {
                          double acc = 0.0;
                          for (const auto& c : as_components(law)) {
                            const double ov = 1.0 + snr * c.variance;
                            const double r = y - t * c.mean;
                            const double dens = std::exp(-0.5 * r * r / ov - kLogSqrt2Pi) / std::sqrt(ov);
                            const auto pm = normal_raw_moments(c.mean + t * c.variance * r / ov, c.variance / ov, i);
                            acc += c.weight * dens * pm[static_cast<std::size_t>(i)];
                          }
                          return acc;
                        }},
                    law.variant());
}

double integrate_output_components(const std::function<double(std::size_t, double)>& g, const InputLaw& law,
                                   double snr, const QuadratureSpec& spec) {
  spec.validate();
  const auto comps = output_components(law, snr);
  std::vector<double> features;
  for (const auto& c : comps) features.push_back(c.mean);
  for (std::size_t i = 0; i + 1 < comps.size(); ++i) features.push_back(0.5 * (comps[i].mean + comps[i + 1].mean));
  std::sort(features.begin(), features.end());
  double acc = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (comps[k].weight == 0.0) continue;
    acc += comps[k].weight *
           component_expectation([&](double y) { return g(k, y); }, comps[k].mean, std::sqrt(comps[k].variance), spec, features);
  }
  return acc;
}

double integrate_output(const RealFunction& f, const InputLaw& law, double snr, const QuadratureSpec& spec) {
  spec.validate();
  if (!(snr >= 0.0)) throw std::invalid_argument("integrate_output: snr must be >= 0");
  if (!law.is_gridded()) {
    return integrate_output_components([&](std::size_t, double y) { return f(y); }, law, snr, spec);
  }
  const auto& g = std::get<GriddedDensity>(law.variant());
  const Moments m = moments(law);
  const double t = std::sqrt(snr);
  const double center = t * m.mean;
  const double half = spec.y_cutoff * std::sqrt(1.0 + snr * m.variance);
  std::vector<double> pts{center - half, center + half};
  // Support edges get the full set of offsets; interior kinks only where
  // they are at least one noise sd apart in y.
  for (double x : {g.grid.front(), g.grid.back()}) {
    for (double off : {-kGridNoiseWindow, -3.0, 0.0, 3.0, kGridNoiseWindow}) {
      const double y = t * x + off;
      if (y > pts[0] && y < pts[1]) pts.push_back(y);
    }
  }
  double last = -kInf;
  for (double x : g.grid) {
    const double y = t * x;
    if (y - last >= 1.0 && y > pts[0] && y < pts[1]) {
      pts.push_back(y);
      last = y;
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto integrand = [&](double y) {
    const double q0 = gridded_integral(g, t, y, [](double) { return 1.0; });
    return q0 > 0.0 ? f(y) * q0 : 0.0;
  };
  AdaptiveOptions opts;
  opts.abs_tol = spec.adaptive_tol;
  opts.rel_tol = 1e-14;
  opts.max_intervals = 20000;
  return integrate_adaptive(integrand, pts, opts).value;
}

InputLaw add_gaussian_noise(const InputLaw& law, double noise_var) {
  if (!(noise_var >= 0.0)) throw std::invalid_argument("add_gaussian_noise: variance must be >= 0");
  if (noise_var == 0.0) return law;
  auto comps = as_components(law);
  for (auto& c : comps) c.variance += noise_var;
  if (comps.size() == 1) return InputLaw::gaussian(comps[0].mean, comps[0].variance);
  return InputLaw::mixture(std::move(comps));
}

InputLaw convolve(const InputLaw& a, const InputLaw& b) {
  const auto ca = as_components(a);
  const auto cb = as_components(b);
  std::vector<MixtureComponent> out;
  for (const auto& x : ca)
    for (const auto& y : cb) out.push_back({x.weight * y.weight, x.mean + y.mean, x.variance + y.variance});
  // Renormalize away the rounding in the weight products.
  double total = 0.0;
  for (const auto& c : out) total += c.weight;
  for (auto& c : out) c.weight /= total;
  if (a.is_discrete() && b.is_discrete()) {
    std::vector<double> v, p;
    for (const auto& c : out) v.push_back(c.mean), p.push_back(c.weight);
    return InputLaw::atoms(std::move(v), std::move(p));
  }
  if (out.size() == 1) return InputLaw::gaussian(out[0].mean, out[0].variance);
  return InputLaw::mixture(std::move(out));
}

InputLaw affine_map(const InputLaw& law, double a, double b) {
  if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("affine_map: scale must be finite and non-zero");
  return std::visit(Overloaded{
                        [&](const DiscreteAtoms& d) {
                          auto v = d.values;
                          for (double& x : v) x = a * x + b;
                          return InputLaw::atoms(std::move(v), d.probs);
                        },
                        [&](const Gaussian& g) { return InputLaw::gaussian(a * g.mean + b, a * a * g.variance); },
                        [&](const GaussianMixture& m) {
                          auto c = m.components;
                          for (auto& k : c) k.mean = a * k.mean + b, k.variance *= a * a;
                          return InputLaw::mixture(std::move(c));
                        },
                        [&](const GriddedDensity& g) {
                          std::vector<double> grid(g.grid.size()), pdf(g.pdf.size());
                          for (std::size_t i = 0; i < grid.size(); ++i) {
                            const std::size_t j = a > 0 ? i : grid.size() - 1 - i;
                            grid[i] = a * g.grid[j] + b;
                            pdf[i] = g.pdf[j] / std::abs(a);
                          }
                          return InputLaw::gridded(std::move(grid), std::move(pdf));
                        }},
                    law.variant());
}

}  // namespace immse
