#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "immse/quadrature.hpp"
#include "immse/random.hpp"

namespace immse {

struct DiscreteAtoms {
  std::vector<double> values;
  std::vector<double> probs;
};

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;
};

struct MixtureComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

struct GaussianMixture {
  std::vector<MixtureComponent> components;
};

// Piecewise-linear density on an increasing grid, zero outside it.
struct GriddedDensity {
  std::vector<double> grid;
  std::vector<double> pdf;
};

// A one-dimensional input distribution. Construction validates the variant;
// gridded densities are renormalized to unit trapezoid mass.
class InputLaw {
 public:
  using Variant = std::variant<DiscreteAtoms, Gaussian, GaussianMixture, GriddedDensity>;

  explicit InputLaw(Variant v);

  static InputLaw binary();  // equiprobable +-1
  static InputLaw atoms(std::vector<double> values, std::vector<double> probs);
  static InputLaw gaussian(double mean, double variance);
  static InputLaw mixture(std::vector<MixtureComponent> components);
  static InputLaw gridded(std::vector<double> grid, std::vector<double> pdf);
  static InputLaw uniform_gridded(double lo, double hi, std::size_t points);

  const Variant& variant() const { return v_; }
  bool is_discrete() const { return std::holds_alternative<DiscreteAtoms>(v_); }
  bool is_gridded() const { return std::holds_alternative<GriddedDensity>(v_); }
  // True when the law has a Lebesgue density (everything except atoms).
  bool has_density() const { return !is_discrete(); }
  std::string describe() const;

 private:
  Variant v_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double m3 = 0.0;  // raw E X^3
  double m4 = 0.0;  // raw E X^4
};

Moments moments(const InputLaw& law);

// Central third/fourth moments of (X - mean)/sd, packaged as a zero-mean
// unit-variance Moments value.
Moments standardized(const Moments& m);

// Draws from a law with its cumulative tables precomputed.
class Sampler {
 public:
  explicit Sampler(const InputLaw& law);
  double operator()(Engine& eng) const;

 private:
  InputLaw law_;
  std::vector<double> cdf_;  // over atoms, mixture components or grid points
};

std::vector<double> sample(const InputLaw& law, std::uint64_t seed, std::size_t n);


// Y = sqrt(snr) X + N is a Gaussian mixture for every non-gridded law.
struct OutputComponent {
  double weight;
  double mean;      // sqrt(snr) * input component mean
  double variance;  // 1 + snr * input component variance
};

std::vector<OutputComponent> output_components(const InputLaw& law, double snr);

// Posterior summary of X given Y = y at the given snr.
struct PosteriorStats {
  double log_density;  // log q_0(y); -inf when the density underflows
  double mean;         // E[X | Y = y]
  double variance;     // Var[X | Y = y]
};

PosteriorStats posterior_at(const InputLaw& law, double snr, double y);

// One draw of X given Y = y (gridded laws are not supported).
double sample_posterior(const InputLaw& law, double snr, double y, Engine& eng);

// q_i(y) = E[X^i p_{Y|X}(y|X)].
double q_moment(const InputLaw& law, double snr, double y, int i);

// Integral of f(y) p_Y(y) over the output. Non-gridded laws are integrated
// per output component (Gauss-Hermite with an adaptive Gauss-Kronrod
// fallback); gridded laws use composite adaptive quadrature on the window
// centered at sqrt(snr) E X with half-width y_cutoff * sd(Y).
double integrate_output(const RealFunction& f, const InputLaw& law, double snr,
                        const QuadratureSpec& spec);

// Sum_k w_k E[g(k, Y_k)] with Y_k the k-th output component. Gridded laws
// are rejected.
double integrate_output_components(const std::function<double(std::size_t, double)>& g,
                                   const InputLaw& law, double snr, const QuadratureSpec& spec);

// Law of X + Z with Z ~ N(0, noise_var) independent; gridded laws unsupported.
InputLaw add_gaussian_noise(const InputLaw& law, double noise_var);

// Law of X1 + X2 for independent non-gridded inputs; atoms convolve with
// atoms to atoms, anything else to a Gaussian mixture.
InputLaw convolve(const InputLaw& a, const InputLaw& b);

// Law of a * X + b.
InputLaw affine_map(const InputLaw& law, double a, double b);

}  // namespace immse
