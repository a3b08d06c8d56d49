#pragma once

#include <functional>
#include <span>
#include <vector>

namespace immse {

// Controls for every output-domain integral in the library.
struct QuadratureSpec {
  int hermite_order = 127;
  double adaptive_tol = 1e-10;  // absolute error target
  double y_cutoff = 12.0;       // window half-width in output standard deviations

  void validate() const;
};

using RealFunction = std::function<double(double)>;

// Nodes/weights for E[f(Z)], Z ~ N(0,1): E f(Z) ~= sum_i w_i f(z_i).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached per order; safe to call concurrently.
const GaussHermiteRule& gauss_hermite_rule(int order);

double expect_normal(const RealFunction& f, const GaussHermiteRule& rule, double mean = 0.0,
                     double stddev = 1.0);

struct AdaptiveOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

// Globally adaptive 21-point Gauss-Kronrod on [a, b]; the interval with the
// largest error estimate is bisected until sum(error) <= max(abs_tol,
// rel_tol*|value|). Throws NonConvergence when max_intervals is exhausted.
QuadratureResult integrate_adaptive(const RealFunction& f, double a, double b,
                                    const AdaptiveOptions& opts);

// Same, with the initial partition given by sorted breakpoints (at least two).
QuadratureResult integrate_adaptive(const RealFunction& f, std::span<const double> breakpoints,
                                    const AdaptiveOptions& opts);

// Fixed 10-point Gauss-Legendre on [a, b].
double gauss_legendre10(const RealFunction& f, double a, double b);

}  // namespace immse
