#pragma once

#include <array>
#include <span>

#include "immse/report.hpp"

namespace immse {

// Symmetric +-1 Markov input with flip rate nu observed through
// dY = sqrt(snr) X dt + dW.
struct TelegraphModel {
  double nu = 1.0;
  double snr = 0.0;

  void validate() const;
  double xi() const { return -2.0 * nu / snr; }  // snr > 0
};

// f(i, j) = int_1^inf u^(i/2) (u - 1)^(j/2) exp(xi u) du for xi < 0, j >= -1
// (any integer i). Evaluated as 2 int_0^inf v^(j+1) (1 + v^2)^(i/2)
// exp(xi (1 + v^2)) dv after u = 1 + v^2.
double f_integral(int i, int j, double xi);
// exp(-xi) f(i, j): avoids underflow when xi is very negative.
double f_integral_scaled(int i, int j, double xi);

struct FIntegralTable {
  double xi = 0.0;
  std::array<std::array<double, 3>, 3> values{};  // [i][j] for i, j in {-1, 1, 3}

  static FIntegralTable compute(double xi);
  double at(int i, int j) const;
};

// Partial-fraction, derivative and integration-by-parts identities of f at
// the given xi for i, j in {-1, 1, 3} (the last only for j >= 1, where the
// boundary term vanishes and f(i, j - 2) exists). Relative deviations.
Report f_recurrence_check(double xi, double tolerance = 1e-8);

// Filtering error f(-1, -1) / f(1, -1).
double telegraph_cmmse(const TelegraphModel& m);
// Smoothing error from the double integral over t, u >= 1 with kernel
// 1 / (t + u - 1), normalized by f(1, -1)^2. `tolerance` is the relative
// target of the nested quadrature.
double telegraph_mmse(const TelegraphModel& m, double tolerance = 1e-12);
// d/dsnr [snr cmmse(snr)] in closed form through f(-1,-1), f(1,-1), f(3,-1).
double telegraph_cmmse_rate_derivative(const TelegraphModel& m);

// At each snr: smoothing error against the closed-form derivative of
// snr cmmse, against a central difference of snr cmmse, and the underlying
// identity exp(xi) d/dxi [exp(-xi) N(xi)] = f(1,-1)^2 both with the
// derivative from the recurrences and by finite differences.
Report telegraph_differential_check(double nu, std::span<const double> snr_grid, double tolerance = 1e-4);

// cmmse(snr) against (1/snr) int_0^snr mmse(g) dg at each grid point, plus
// the low-snr ratio (1 - mmse)/(1 - cmmse) at `low_snr` against 2.
Report verify_thm7(double nu, std::span<const double> snr_grid, double tolerance = 1e-4, double low_snr = 1e-3,
                   double ratio_tolerance = 0.01);

// I(snr) two ways: snr/2 cmmse and 1/2 int_0^snr mmse.
Report duncan_check(const TelegraphModel& m, double tolerance = 1e-4);

// (1/snr) int_0^snr mmse(g) dg by adaptive quadrature.
double telegraph_averaged_mmse(double nu, double snr, double tolerance = 1e-9);

}  // namespace immse
