#pragma once

#include <span>

#include "immse/report.hpp"

namespace immse {

// Stationary Gauss-Markov (OU) input: S(w) = variance * 2 beta / (beta^2 + w^2).
struct SpectrumModel {
  double variance = 1.0;
  double beta = 1.0;

  void validate() const;
  double density(double omega) const;
};

struct SpectralQuantities {
  double mi_rate = 0.0;  // 1/2 int log(1 + snr S) dw / 2pi
  double mmse = 0.0;     // int S / (1 + snr S) dw / 2pi
  double cmmse = 0.0;    // 1/snr int log(1 + snr S) dw / 2pi (variance at snr = 0)
};

// Frequency quadrature of the three integrands (w = beta tan a on a in
// [0, pi/2)).
SpectralQuantities spectral_quantities(const SpectrumModel& s, double snr);
// (1/2pi) int S dw by the same quadrature.
double spectral_power(const SpectrumModel& s);

// With r = sqrt(beta^2 + 2 beta snr variance): mi_rate = (r - beta)/2,
// mmse = variance beta / r, cmmse = (r - beta)/snr.
SpectralQuantities ou_closed_form(const SpectrumModel& s, double snr);

// Quadrature vs closed forms, snr cmmse = 2 mi_rate, five-point difference of
// mi_rate against mmse/2, and the process power.
Report spectral_check(const SpectrumModel& s, std::span<const double> snr_grid, double tolerance = 1e-8);

// cmmse(snr) against (1/snr) int_0^snr mmse and snr/2 cmmse against
// 1/2 int_0^snr mmse (closed-form integrands, adaptive quadrature).
Report ou_causal_average_check(const SpectrumModel& s, std::span<const double> snr_grid, double tolerance = 1e-10);

// cmmse/mmse at high snr against 2 (relative band) and
// (mmse(0) - mmse)/(cmmse(0) - cmmse) at low snr against 2.
Report spectral_ratio_check(const SpectrumModel& s, std::span<const double> high_snr, double high_band,
                            double low_snr, double low_band);

}  // namespace immse
