#include "immse/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "immse/error.hpp"

namespace immse {

void QuadratureSpec::validate() const {
  if (hermite_order < 2) throw std::invalid_argument("QuadratureSpec: hermite_order must be >= 2");
  if (!(adaptive_tol > 0.0)) throw std::invalid_argument("QuadratureSpec: adaptive_tol must be > 0");
  if (!(y_cutoff > 0.0)) throw std::invalid_argument("QuadratureSpec: y_cutoff must be > 0");
}

namespace {

// Physicists' Hermite nodes by Newton iteration on the orthonormal
// recurrence, then rescaled to the standard normal weight.
GaussHermiteRule build_hermite(int n) {
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = kPiM4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NonConvergence("gauss_hermite_rule: Newton iteration failed at order " + std::to_string(n));
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] * inv_sqrt_pi;
  }
  return rule;
}

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk21(const RealFunction& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(mid);
  double kron = fc * wk[0];
  double gauss = 0.0;
  // Gauss order 10 is even: Gauss nodes sit at the odd Kronrod indices.
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fp = f(mid + half * xk[i]);
    const double fm = f(mid - half * xk[i]);
    kron += (fp + fm) * wk[i];
    if (i % 2 == 1) gauss += (fp + fm) * wg[i / 2];
  }
  Panel p{a, b, kron * half, 0.0};
  p.error = std::max(std::abs((kron - gauss) * half), 4.0 * std::numeric_limits<double>::epsilon() * std::abs(p.value));
  return p;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int order) {
  if (order < 2) throw std::invalid_argument("gauss_hermite_rule: order must be >= 2");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_hermite(order));
  return *slot;
}

double expect_normal(const RealFunction& f, const GaussHermiteRule& rule, double mean, double stddev) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mean + stddev * rule.nodes[i]);
  return acc;
}

QuadratureResult integrate_adaptive(const RealFunction& f, std::span<const double> breakpoints,
                                    const AdaptiveOptions& opts) {
  if (breakpoints.size() < 2) throw std::invalid_argument("integrate_adaptive: need at least two breakpoints");
  std::priority_queue<Panel> heap;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    Panel p = gk21(f, breakpoints[i], breakpoints[i + 1]);
    value += p.value;
    error += p.error;
    heap.push(p);
  }
  int count = static_cast<int>(heap.size());
  auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(value)); };
  while (error > target()) {
    if (count >= opts.max_intervals || heap.empty()) {
      throw NonConvergence("integrate_adaptive: error estimate " + std::to_string(error) +
                           " above target " + std::to_string(target()) + " after " +
                           std::to_string(count) + " intervals");
    }
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw NonConvergence("integrate_adaptive: interval collapsed to machine precision");
    }
    Panel left = gk21(f, worst.a, mid);
    Panel right = gk21(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed the drift of the running updates.
  double total = 0.0;
  double total_err = 0.0;
  std::vector<Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  for (const auto& p : panels) {
    total += p.value;
    total_err += p.error;
  }
  return {total, total_err, count};
}

QuadratureResult integrate_adaptive(const RealFunction& f, double a, double b, const AdaptiveOptions& opts) {
  const double pts[2] = {a, b};
  return integrate_adaptive(f, std::span<const double>(pts, 2), opts);
}

double gauss_legendre10(const RealFunction& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

}  // namespace immse
