#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "immse/input_law.hpp"
#include "immse/quadrature.hpp"
#include "immse/random.hpp"
#include "immse/report.hpp"

namespace immse {

// Y = sqrt(snr) X + N with N ~ N(0, 1) independent of X.
struct ScalarChannel {
  InputLaw law;
  double snr = 0.0;
  QuadratureSpec quad{};

  ScalarChannel(InputLaw l, double s, QuadratureSpec q = {});
};

double q_moment(const ScalarChannel& ch, double y, int i);
double conditional_mean(const ScalarChannel& ch, double y);
double mmse(const ScalarChannel& ch);
double mutual_information(const ScalarChannel& ch);

// Equiprobable +-1 input, evaluated from the tanh / log-cosh integrands.
double mmse_binary_closed(double snr);
double mi_binary_closed(double snr);

// Gaussian input of the given variance.
double mmse_gaussian_closed(double variance, double snr);
double mi_gaussian_closed(double variance, double snr);

// d/dy log p_Y(y) = sqrt(snr) E[X | Y = y] - y.
double score(const ScalarChannel& ch, double y);

// 1 - snr * mmse(snr).
double fisher_information(const ScalarChannel& ch);
// E[score(Y)^2] by output quadrature.
double fisher_information_direct(const ScalarChannel& ch);

// Finite-difference step used throughout: delta * max(1, snr).
double fd_step(double delta, double snr);

// Quadrature settings tight enough that finite differences of I are not
// polluted by integration error.
QuadratureSpec fd_quadrature(const QuadratureSpec& base);

// Central difference of I against mmse/2 at each grid point (one-sided
// second-order stencil at snr = 0).
Report verify_immse(const InputLaw& law, std::span<const double> snr_grid, double delta_fd = 1e-4,
                    double tolerance = 1e-6, const QuadratureSpec& quad = {});

// I(snr) against half the integral of mmse over [0, snr]: adaptive quadrature
// and a uniform trapezoid rule with `points` nodes.
Report verify_integral_form(const InputLaw& law, double snr, std::size_t points = 400,
                            double adaptive_tolerance = 1e-6, double trapezoid_tolerance = 1e-5,
                            const QuadratureSpec& quad = {});

struct IncrementalPair {
  double snr = 0.0;
  double delta = 0.0;
  double sigma1_sq = 0.0;  // 1 / (snr + delta)
  double sigma2_sq = 0.0;  // 1 / snr - 1 / (snr + delta)
};

IncrementalPair incremental_decompose(double snr, double delta);

// Samples the cascade Y1 = X + sigma1 N1, Y2 = Y1 + sigma2 N2 and the direct
// channel X + N / sqrt(snr); two-sample KS test on Y2 vs the direct output.
Report incremental_channel_check(const InputLaw& law, const IncrementalPair& pair, std::size_t n,
                                 std::uint64_t seed, double min_pvalue = 1e-3);

// I(delta)/delta against Var(X)/2, and the log-log slope of the deficiency
// Var(X) delta / 2 - I(delta) (expected 2).
Report lemma1_low_snr(const InputLaw& law, std::span<const double> deltas, const QuadratureSpec& quad = {});

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t draws = 0;
};

// d/dsnr D(P_{Y|X=x} || P_Y) = E|x - X'|^2 / 2 - E[X' N] / (2 sqrt(snr)) with
// X' drawn from the posterior given Y = sqrt(snr) x + N, independently of x.
// By default the inner expectations over X' are taken exactly from the
// posterior moments (the same N drives both terms); with
// sample_retrochannel = true an explicit X' is drawn per sample.
McEstimate divergence_derivative(const InputLaw& law, double x, double snr, const McConfig& mc,
                                 bool sample_retrochannel = false);

// Same quantity with x itself drawn from the law; its mean is mmse/2.
McEstimate averaged_divergence_derivative(const InputLaw& law, double snr, const McConfig& mc,
                                          bool sample_retrochannel = false);

// Low-snr expansions for zero-mean unit-variance moments.
double taylor_coefficient(const Moments& m);
double mmse_taylor(const Moments& m, double snr);
double mi_taylor(const Moments& m, double snr);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Log-log slopes of |mmse - mmse_taylor| and |I - mi_taylor| over the grid.
Report taylor_order_check(const InputLaw& law, std::span<const double> snr_grid, double min_mmse_slope = 3.8,
                          double min_mi_slope = 4.8, const QuadratureSpec& quad = {});

// X -> Z = X + sqrt(noise_var) N' -> Y = sqrt(snr) Z + N: finite difference of
// I(X; Y) = I(Z; Y) - log(1 + snr noise_var) / 2 against
// (mmse(Z | Y) - mmse(Z | Y, X)) / 2. Gaussian X adds closed-form checks.
Report preprocessor_derivative(const InputLaw& law_x, double noise_var, double snr, double delta_fd = 1e-4,
                               double tolerance = 1e-8, const QuadratureSpec& quad = {});

// Fit of log mmse_binary_closed(snr) against snr; plus the log-log slope for
// the unit Gaussian for contrast.
struct DecayFit {
  LineFit binary;    // log mmse vs snr
  LineFit gaussian;  // log mmse vs log snr
  bool binary_decreasing = false;
};

DecayFit high_snr_decay(std::span<const double> snr_grid);

}  // namespace immse
