#include "immse/representations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "immse/error.hpp"
#include "immse/random.hpp"
#include "immse/scalar_channel.hpp"

namespace immse {

TailEstimator parse_tail_estimator(const std::string& name) {
  if (name == "none") return TailEstimator::none;
  if (name == "gaussian_tail") return TailEstimator::gaussian_tail;
  if (name == "exponential_fit") return TailEstimator::exponential_fit;
  throw std::invalid_argument("unknown tail estimator '" + name + "'");
}

std::string to_string(TailEstimator t) {
  switch (t) {
    case TailEstimator::none:
      return "none";
    case TailEstimator::gaussian_tail:
      return "gaussian_tail";
    case TailEstimator::exponential_fit:
      return "exponential_fit";
  }
  return "none";
}

void TailPolicy::validate() const {
  if (!(snr_max >= 1.0) || !std::isfinite(snr_max)) throw std::invalid_argument("TailPolicy: snr_max must be >= 1");
}

namespace {

constexpr double kGridStart = 1e-3;
constexpr int kPerDecade = 40;
// Integrand values below this are treated as quadrature noise by the tail fits.
constexpr double kNoiseFloor = 1e-13;

std::vector<double> outer_grid(double snr_max) {
  std::vector<double> g{0.0};
  for (int k = 0;; ++k) {
    const double s = kGridStart * std::pow(10.0, static_cast<double>(k) / kPerDecade);
    if (s >= snr_max * (1.0 - 1e-12)) break;
    g.push_back(s);
  }
  g.push_back(snr_max);
  return g;
}

QuadratureSpec tight(const QuadratureSpec& q) {
  QuadratureSpec t = q;
  t.adaptive_tol = std::min(q.adaptive_tol, 1e-14);
  return t;
}

}  // namespace

SnrIntegral integrate_snr(const std::function<double(double)>& f, const TailPolicy& tail, double threshold) {
  tail.validate();
  SnrIntegral r;
  r.nodes = outer_grid(tail.snr_max);
  r.integrand.reserve(r.nodes.size());
  for (double s : r.nodes) r.integrand.push_back(f(s));
  for (std::size_t i = 0; i + 1 < r.nodes.size(); ++i) r.truncated += gauss_legendre10(f, r.nodes[i], r.nodes[i + 1]);

  const double top = r.integrand.back();
  if (tail.tail_estimator == TailEstimator::none) {
    if (std::abs(top) > threshold)
      throw TailNotResolved("integrand " + std::to_string(top) + " at snr_max = " + std::to_string(tail.snr_max) +
                            " exceeds " + std::to_string(threshold));
    r.value = r.truncated;
    return r;
  }
  // Fit over the last decade, ignoring values lost in quadrature noise.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    if (r.nodes[i] < 0.1 * tail.snr_max || !(r.integrand[i] > kNoiseFloor)) continue;
    xs.push_back(tail.tail_estimator == TailEstimator::gaussian_tail ? std::log(r.nodes[i]) : r.nodes[i]);
    ys.push_back(std::log(r.integrand[i]));
  }
  if (xs.size() < 3 || !(top > kNoiseFloor)) {
    // Nothing above the noise floor at the end of the range: the tail is negligible.
    r.value = r.truncated;
    return r;
  }
  const LineFit fit = fit_line(xs, ys);
  r.fit_residual = fit.max_residual;
  r.rate = -fit.slope;
  if (tail.tail_estimator == TailEstimator::exponential_fit) {
    if (!(r.rate > 0.0)) throw TailNotResolved("exponential tail fit does not decay (rate " + std::to_string(r.rate) + ")");
    r.tail = top / r.rate;
  } else {
    if (!(r.rate > 1.0))
      throw TailNotResolved("power-law tail exponent " + std::to_string(r.rate) + " <= 1: integral diverges");
    r.tail = top * tail.snr_max / (r.rate - 1.0);
  }
  r.value = r.truncated + r.tail;
  return r;
}

double Mapping::operator()(double x) const {
  switch (kind) {
    case Kind::identity:
      return x;
    case Kind::affine:
      return scale * x + offset;
    case Kind::cubic:
      return scale * x * x * x + offset;
  }
  return x;
}

namespace {

const DiscreteAtoms& require_atoms(const InputLaw& law, const char* who) {
  if (!law.is_discrete()) throw std::invalid_argument(std::string(who) + ": law must be a finite atom set");
  return std::get<DiscreteAtoms>(law.variant());
}

double law_mmse(const InputLaw& law, double snr, const QuadratureSpec& quad) {
  if (law.is_discrete() && std::get<DiscreteAtoms>(law.variant()).values.size() == 1) return 0.0;
  return mmse(ScalarChannel(law, snr, quad));
}

}  // namespace

double discrete_entropy(const InputLaw& atoms) {
  const auto& a = require_atoms(atoms, "discrete_entropy");
  double h = 0.0;
  for (double p : a.probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

SnrIntegral entropy_via_mmse(const InputLaw& atoms, const Mapping& g, const TailPolicy& tail,
                             const QuadratureSpec& quad) {
  const auto& a = require_atoms(atoms, "entropy_via_mmse");
  if (g.scale == 0.0) throw std::invalid_argument("entropy_via_mmse: mapping scale must be nonzero");
  std::vector<double> values;
  for (double v : a.values) values.push_back(g(v));
  auto sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("entropy_via_mmse: mapping is not injective on the atoms");
  for (double p : a.probs)
    if (p > 0.0 && p < 1e-6)
      throw std::invalid_argument("entropy_via_mmse: atom probabilities below 1e-6 are not supported");
  const InputLaw mapped = InputLaw::atoms(values, a.probs);
  const QuadratureSpec q = tight(quad);
  auto f = [&](double s) { return 0.5 * law_mmse(mapped, s, q); };
  // The running estimate at snr_max stands in for H in the truncation threshold.
  if (tail.tail_estimator == TailEstimator::none) {
    TailPolicy probe = tail;
    probe.tail_estimator = TailEstimator::exponential_fit;
    const auto est = integrate_snr(f, probe, 0.0);
    if (std::abs(est.integrand.back()) > 1e-4 * est.truncated)
      throw TailNotResolved("entropy integrand " + std::to_string(est.integrand.back()) + " at snr_max = " +
                            std::to_string(tail.snr_max) + " exceeds 1e-4 of the estimate " +
                            std::to_string(est.truncated));
    auto r = est;
    r.tail = 0.0;
    r.rate = 0.0;
    r.fit_residual = 0.0;
    r.value = r.truncated;
    return r;
  }
  return integrate_snr(f, tail, 0.0);
}

SnrIntegral nongaussianness(const InputLaw& law, const TailPolicy& tail, const QuadratureSpec& quad) {
  const double var = moments(law).variance;
  const QuadratureSpec q = tight(quad);
  auto f = [&](double s) { return 0.5 * (var / (1.0 + s * var) - law_mmse(law, s, q)); };
  return integrate_snr(f, tail, 1e-4);
}

double differential_entropy_via_mmse(const InputLaw& law, const TailPolicy& tail, const QuadratureSpec& quad) {
  if (!law.has_density()) throw std::invalid_argument("differential_entropy_via_mmse: law must have a density");
  const double var = moments(law).variance;
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var) - nongaussianness(law, tail, quad).value;
}

namespace {

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Density and the breakpoints of its support for laws with a density.
struct DensityView {
  std::function<double(double)> pdf;
  std::vector<double> breaks;
};

DensityView density_view(const InputLaw& law) {
  DensityView d;
  if (const auto* g = std::get_if<Gaussian>(&law.variant())) {
    const double sd = std::sqrt(g->variance);
    d.pdf = [g](double x) { return normal_pdf(x, g->mean, g->variance); };
    for (double k : {-40.0, -10.0, -3.0, 0.0, 3.0, 10.0, 40.0}) d.breaks.push_back(g->mean + k * sd);
  } else if (const auto* m = std::get_if<GaussianMixture>(&law.variant())) {
    d.pdf = [m](double x) {
      double p = 0.0;
      for (const auto& c : m->components) p += c.weight * normal_pdf(x, c.mean, c.variance);
      return p;
    };
    for (const auto& c : m->components) {
      const double sd = std::sqrt(c.variance);
      for (double k : {-40.0, -10.0, -3.0, 0.0, 3.0, 10.0, 40.0}) d.breaks.push_back(c.mean + k * sd);
    }
  } else if (const auto* gr = std::get_if<GriddedDensity>(&law.variant())) {
    d.pdf = [gr](double x) {
      const auto& xs = gr->grid;
      if (x < xs.front() || x > xs.back()) return 0.0;
      const auto it = std::upper_bound(xs.begin(), xs.end(), x);
      if (it == xs.end()) return gr->pdf.back();
      const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
      const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
      return (1.0 - t) * gr->pdf[i] + t * gr->pdf[i + 1];
    };
    d.breaks = gr->grid;
  } else {
    throw std::invalid_argument("law has no density");
  }
  std::sort(d.breaks.begin(), d.breaks.end());
  d.breaks.erase(std::unique(d.breaks.begin(), d.breaks.end()), d.breaks.end());
  return d;
}

double xlogx_integral(const InputLaw& law, const std::function<double(double, double)>& term) {
  const auto d = density_view(law);
  auto f = [&](double x) {
    const double p = d.pdf(x);
    return p > 0.0 ? term(x, p) : 0.0;
  };
  return integrate_adaptive(f, d.breaks, {1e-13, 1e-13, 20000}).value;
}

}  // namespace

double divergence_from_gaussian(const InputLaw& law) {
  const auto m = moments(law);
  return xlogx_integral(law, [&](double x, double p) {
    const double lq = -0.5 * (x - m.mean) * (x - m.mean) / m.variance - 0.5 * std::log(2.0 * std::numbers::pi * m.variance);
    return p * (std::log(p) - lq);
  });
}

double differential_entropy_direct(const InputLaw& law) {
  return xlogx_integral(law, [](double, double p) { return -p * std::log(p); });
}

double output_divergence(const InputLaw& p, const InputLaw& q, double snr, const QuadratureSpec& quad) {
  if (!(snr >= 0.0)) throw std::invalid_argument("output_divergence: snr must be >= 0");
  if (snr == 0.0) return 0.0;
  auto f = [&](double y) { return posterior_at(p, snr, y).log_density - posterior_at(q, snr, y).log_density; };
  return integrate_output(f, p, snr, tight(quad));
}

double input_divergence(const InputLaw& p, const InputLaw& q) {
  const auto dp = density_view(p);
  const auto dq = density_view(q);
  std::vector<double> breaks = dp.breaks;
  breaks.insert(breaks.end(), dq.breaks.begin(), dq.breaks.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto f = [&](double x) {
    const double a = dp.pdf(x);
    // deep tails: both densities may underflow at different points
    if (!(a > 1e-290)) return 0.0;
    const double b = dq.pdf(x);
    if (!(b > 0.0)) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
  };
  return integrate_adaptive(f, breaks, {1e-13, 1e-13, 20000}).value;
}

Report discrete_mi_limit_check(const InputLaw& atoms, std::span<const double> snr_grid, double limit_tolerance,
                               const QuadratureSpec& quad) {
  require_atoms(atoms, "discrete_mi_limit_check");
  if (snr_grid.empty()) throw std::invalid_argument("discrete_mi_limit_check: empty grid");
  const double h = discrete_entropy(atoms);
  Report r;
  r.suite = "discrete_limit";
  double prev = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    const double s = snr_grid[i];
    last = mutual_information(ScalarChannel(atoms, s, quad));
    const std::string at = " snr=" + std::to_string(s);
    r.expect_less_equal("I <= H" + at, last, h, 1e-12);
    if (i > 0) r.expect_less_equal("I nondecreasing" + at, prev, last, 1e-12);
    prev = last;
  }
  r.expect_close("I(snr_max) vs H snr=" + std::to_string(snr_grid.back()), last, h, limit_tolerance);
  return r;
}

Report output_divergence_monotonicity(const InputLaw& p, const InputLaw& q, std::span<const double> snr_grid,
                                      const QuadratureSpec& quad) {
  const double dx = input_divergence(p, q);
  Report r;
  r.suite = "divergence_monotonicity";
  double prev = 0.0;
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    const double s = snr_grid[i];
    const double d = output_divergence(p, q, s, quad);
    const std::string at = " snr=" + std::to_string(s);
    if (i > 0) r.expect_less_equal("D(P_Y||Q_Y) nondecreasing" + at, prev, d, 1e-10);
    r.expect_less_equal("D(P_Y||Q_Y) <= D(P||Q)" + at, d, dx, 1e-10);
    prev = d;
  }
  r.note("D(P||Q) = " + std::to_string(dx) + ", gap at the last snr = " + std::to_string(dx - prev));
  return r;
}

Report gamma_epi_check(const InputLaw& a, const InputLaw& b, const TailPolicy& tail, const QuadratureSpec& quad) {
  if (!a.has_density() || !b.has_density() || a.is_gridded() || b.is_gridded())
    throw std::invalid_argument("gamma_epi_check: laws must be Gaussian or Gaussian mixtures");
  const InputLaw s = convolve(a, b);
  const double va = moments(a).variance, vb = moments(b).variance;
  const double ga = std::exp(-nongaussianness(a, tail, quad).value);
  const double gb = std::exp(-nongaussianness(b, tail, quad).value);
  const double gs = std::exp(-nongaussianness(s, tail, quad).value);
  const double alpha = va / (va + vb);
  Report r;
  r.suite = "gamma_epi";
  for (auto [name, g] : {std::pair{"A", ga}, std::pair{"B", gb}, std::pair{"A+B", gs}}) {
    r.expect_less_equal(std::string("gamma_") + name + " <= 1", g, 1.0, 1e-9);
    r.expect_less_equal(std::string("0 < gamma_") + name, 0.0, g);
  }
  r.expect_less_equal("alpha gA^2 + (1-alpha) gB^2 <= g_{A+B}^2", alpha * ga * ga + (1.0 - alpha) * gb * gb, gs * gs,
                      1e-6);
  r.note("A: " + a.describe() + "; B: " + b.describe());
  return r;
}

InputLaw random_mixture(std::uint64_t seed, std::uint64_t index) {
  Engine eng = make_engine(seed, index);
  const int k = boost::random::uniform_int_distribution<int>(2, 3)(eng);
  boost::random::uniform_real_distribution<double> w(0.2, 1.0), mu(-2.0, 2.0), var(0.1, 1.0);
  std::vector<MixtureComponent> c(k);
  double total = 0.0;
  for (auto& comp : c) {
    comp.weight = w(eng);
    comp.mean = mu(eng);
    comp.variance = var(eng);
    total += comp.weight;
  }
  for (auto& comp : c) comp.weight /= total;
  return InputLaw::mixture(c);
}

void JointAtoms::validate() const {
  if (x.empty() || x.size() != z.size() || x.size() != probs.size())
    throw std::invalid_argument("JointAtoms: x, z and probs must be nonempty and of equal length");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("JointAtoms: probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("JointAtoms: probabilities must sum to 1");
}

namespace {

struct JointMarginals {
  std::map<double, double> px;
  std::map<double, double> pz;
  std::map<double, std::map<double, double>> z_given_x;  // unnormalized P(x, z)
};

JointMarginals marginals(const JointAtoms& j) {
  j.validate();
  JointMarginals m;
  for (std::size_t i = 0; i < j.x.size(); ++i) {
    if (j.probs[i] == 0.0) continue;
    m.px[j.x[i]] += j.probs[i];
    m.pz[j.z[i]] += j.probs[i];
    m.z_given_x[j.x[i]][j.z[i]] += j.probs[i];
  }
  return m;
}

InputLaw atoms_of(const std::map<double, double>& w, double scale) {
  std::vector<double> v, p;
  for (auto [value, prob] : w) {
    v.push_back(value);
    p.push_back(prob / scale);
  }
  return InputLaw::atoms(v, p);
}

}  // namespace

double mutual_information_direct(const JointAtoms& j) {
  const auto m = marginals(j);
  double mi = 0.0;
  for (const auto& [x, row] : m.z_given_x)
    for (auto [z, p] : row) mi += p * std::log(p / (m.px.at(x) * m.pz.at(z)));
  return mi;
}

SnrIntegral mi_via_mmse_difference(const JointAtoms& j, const TailPolicy& tail, const QuadratureSpec& quad) {
  const auto m = marginals(j);
  const InputLaw z = atoms_of(m.pz, 1.0);
  std::vector<std::pair<double, InputLaw>> cond;
  for (const auto& [x, row] : m.z_given_x) cond.emplace_back(m.px.at(x), atoms_of(row, m.px.at(x)));
  const QuadratureSpec q = tight(quad);
  auto f = [&](double s) {
    double v = law_mmse(z, s, q);
    for (const auto& [p, law] : cond) v -= p * law_mmse(law, s, q);
    return 0.5 * v;
  };
  return integrate_snr(f, tail, 1e-4);
}

}  // namespace immse
