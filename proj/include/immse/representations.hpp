#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "immse/input_law.hpp"
#include "immse/quadrature.hpp"
#include "immse/report.hpp"

namespace immse {

enum class TailEstimator { none, gaussian_tail, exponential_fit };

TailEstimator parse_tail_estimator(const std::string& name);
std::string to_string(TailEstimator t);

// Truncation of the snr integrals at snr_max plus an optional tail model:
// exponential_fit fits log f(snr) linearly over the last decade (discrete
// inputs); gaussian_tail fits a power law f ~ C snr^-k over the last decade
// (inputs with a density, whose integrands decay algebraically).
struct TailPolicy {
  double snr_max = 100.0;
  TailEstimator tail_estimator = TailEstimator::exponential_fit;

  void validate() const;
};

struct SnrIntegral {
  double value = 0.0;      // truncated + tail
  double truncated = 0.0;  // int_0^snr_max
  double tail = 0.0;
  double rate = 0.0;       // fitted exponential rate or power-law exponent
  double fit_residual = 0.0;
  std::vector<double> nodes;      // outer grid
  std::vector<double> integrand;  // at the outer grid
};

// int_0^snr_max f with 10-point Gauss-Legendre panels on [0, 1e-3] and on a
// geometric grid of 40 points per decade from 1e-3 to snr_max, plus the
// tail. Throws TailNotResolved when the tail estimator is none and
// |f(snr_max)| > threshold, or when a fitted tail does not decay.
SnrIntegral integrate_snr(const std::function<double(double)>& f, const TailPolicy& tail, double threshold);

// Injective map applied to atom values before the entropy integral.
struct Mapping {
  enum class Kind { identity, affine, cubic } kind = Kind::identity;
  double scale = 1.0;
  double offset = 0.0;

  double operator()(double x) const;
  static Mapping identity() { return {}; }
  static Mapping affine(double s, double o) { return {Kind::affine, s, o}; }
  static Mapping cubic(double s, double o) { return {Kind::cubic, s, o}; }
};

// -sum p log p.
double discrete_entropy(const InputLaw& atoms);

// 1/2 int_0^inf mmse(g(X), snr) dsnr for a finite atom law.
SnrIntegral entropy_via_mmse(const InputLaw& atoms, const Mapping& g, const TailPolicy& tail,
                             const QuadratureSpec& quad = {});

// 1/2 int_0^inf [var/(1 + snr var) - mmse(snr)] dsnr.
SnrIntegral nongaussianness(const InputLaw& law, const TailPolicy& tail, const QuadratureSpec& quad = {});

// 1/2 log(2 pi e var) - nongaussianness; the law must have a density.
double differential_entropy_via_mmse(const InputLaw& law, const TailPolicy& tail, const QuadratureSpec& quad = {});

// D(P_X || N(E X, Var X)) by direct quadrature of the density.
double divergence_from_gaussian(const InputLaw& law);
// Differential entropy by direct quadrature of -p log p.
double differential_entropy_direct(const InputLaw& law);

// D(P_Y || Q_Y) for Y = sqrt(snr) X + N under the two input laws.
double output_divergence(const InputLaw& p, const InputLaw& q, double snr, const QuadratureSpec& quad = {});
// D(P || Q) by direct quadrature; both laws must have densities.
double input_divergence(const InputLaw& p, const InputLaw& q);

// For a finite atom law: I(snr) <= H at every grid point, I nondecreasing
// along the (increasing) grid, and |I(last) - H| <= limit_tolerance.
Report discrete_mi_limit_check(const InputLaw& atoms, std::span<const double> snr_grid, double limit_tolerance,
                               const QuadratureSpec& quad = {});

// D(P_Y || Q_Y) nondecreasing along the (increasing) grid and bounded by
// D(P || Q); the remaining gap at the last point is reported as a note.
Report output_divergence_monotonicity(const InputLaw& p, const InputLaw& q, std::span<const double> snr_grid,
                                      const QuadratureSpec& quad = {});

// alpha gA^2 + (1 - alpha) gB^2 <= g_{A+B}^2 with g = exp(-D) and
// alpha = varA / (varA + varB); laws must be non-gridded with a density.
Report gamma_epi_check(const InputLaw& a, const InputLaw& b, const TailPolicy& tail, const QuadratureSpec& quad = {});

// Random two- or three-component mixture drawn from substream `index` of seed.
InputLaw random_mixture(std::uint64_t seed, std::uint64_t index);

// Finite joint law of (X, Z) with Z real.
struct JointAtoms {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> probs;

  void validate() const;
};

// -sum over cells of the joint against the marginals, exact.
double mutual_information_direct(const JointAtoms& j);

// 1/2 int [mmse(Z, snr) - sum_x P(x) mmse(Z | X = x, snr)] dsnr, i.e. the
// difference of E(E[Z|Y,X])^2 and E(E[Z|Y])^2 with Y = sqrt(snr) Z + N.
SnrIntegral mi_via_mmse_difference(const JointAtoms& j, const TailPolicy& tail, const QuadratureSpec& quad = {});

}  // namespace immse
