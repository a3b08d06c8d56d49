#include "immse/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "immse/quadrature.hpp"

namespace immse {

void SpectrumModel::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw std::invalid_argument("SpectrumModel: variance must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("SpectrumModel: beta must be > 0");
}

double SpectrumModel::density(double omega) const { return variance * 2.0 * beta / (beta * beta + omega * omega); }

namespace {

// (1/pi) int_0^inf g(w) dw = (1/2pi) int_R g(w) dw for even g.
template <class G>
double frequency_integral(const SpectrumModel& s, G&& g) {
  auto f = [&](double a) {
    const double t = std::tan(a);
    return g(s.beta * t) * s.beta * (1.0 + t * t);
  };
  // Breakpoints cluster toward pi/2, where high-snr integrands turn over.
  std::vector<double> br{0.0, 0.25 * std::numbers::pi};
  for (double e = 0.5; e > 1e-8; e *= 0.1) br.push_back(0.5 * std::numbers::pi - e);
  br.push_back(0.5 * std::numbers::pi);
  return integrate_adaptive(f, br, {0.0, 1e-14, 8000}).value / std::numbers::pi;
}

void check_snr(double snr) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::invalid_argument("snr must be finite and >= 0");
}

}  // namespace

SpectralQuantities spectral_quantities(const SpectrumModel& s, double snr) {
  s.validate();
  check_snr(snr);
  SpectralQuantities q;
  q.mmse = frequency_integral(s, [&](double w) {
    const double d = s.density(w);
    return d / (1.0 + snr * d);
  });
  if (snr == 0.0) {
    q.mi_rate = 0.0;
    q.cmmse = q.mmse;
    return q;
  }
  const double l = frequency_integral(s, [&](double w) { return std::log1p(snr * s.density(w)); });
  q.mi_rate = 0.5 * l;
  q.cmmse = l / snr;
  return q;
}

double spectral_power(const SpectrumModel& s) {
  s.validate();
  return frequency_integral(s, [&](double w) { return s.density(w); });
}

SpectralQuantities ou_closed_form(const SpectrumModel& s, double snr) {
  s.validate();
  check_snr(snr);
  const double r = std::sqrt(s.beta * s.beta + 2.0 * s.beta * snr * s.variance);
  SpectralQuantities q;
  q.mi_rate = 0.5 * (r - s.beta);
  q.mmse = s.variance * s.beta / r;
  // (r - beta)/snr without cancellation at small snr.
  q.cmmse = snr == 0.0 ? s.variance : 2.0 * s.beta * s.variance / (r + s.beta);
  return q;
}

Report spectral_check(const SpectrumModel& s, std::span<const double> snr_grid, double tolerance) {
  Report r;
  r.suite = "spectral";
  r.expect_close("process power", spectral_power(s), s.variance, tolerance);
  for (double snr : snr_grid) {
    const std::string at = " snr=" + std::to_string(snr);
    const auto q = spectral_quantities(s, snr);
    const auto c = ou_closed_form(s, snr);
    r.expect_close("mi_rate vs closed form" + at, q.mi_rate, c.mi_rate, tolerance);
    r.expect_close("mmse vs closed form" + at, q.mmse, c.mmse, tolerance);
    r.expect_close("cmmse vs closed form" + at, q.cmmse, c.cmmse, tolerance);
    r.expect_close("snr cmmse vs 2 mi_rate" + at, snr * q.cmmse, 2.0 * q.mi_rate, tolerance);
    r.expect_less_equal("mmse <= cmmse" + at, q.mmse, q.cmmse);
    if (snr > 0.0) {
      const double h = 1e-3 * std::max(1.0, snr) * std::min(1.0, snr / 1e-2);
      auto mi = [&](double x) { return spectral_quantities(s, x).mi_rate; };
      const double d = (-mi(snr + 2 * h) + 8 * mi(snr + h) - 8 * mi(snr - h) + mi(snr - 2 * h)) / (12 * h);
      r.expect_close("d mi_rate/dsnr vs mmse/2" + at, d, 0.5 * q.mmse, tolerance);
    }
  }
  return r;
}

Report ou_causal_average_check(const SpectrumModel& s, std::span<const double> snr_grid, double tolerance) {
  s.validate();
  Report r;
  r.suite = "ou_causal_average";
  for (double snr : snr_grid) {
    if (!(snr > 0.0)) throw std::invalid_argument("ou_causal_average_check: snr must be > 0");
    const std::string at = " snr=" + std::to_string(snr);
    auto f = [&](double g) { return ou_closed_form(s, g).mmse; };
    std::vector<double> br{0.0};
    for (double b : {1e-2, 1e-1, 1.0, 10.0, 100.0})
      if (b * s.beta < snr) br.push_back(b * s.beta);
    br.push_back(snr);
    const double integral = integrate_adaptive(f, br, {1e-3 * tolerance * snr, 1e-15, 4000}).value;
    const auto c = ou_closed_form(s, snr);
    r.expect_close("cmmse vs averaged mmse" + at, c.cmmse, integral / snr, tolerance);
    r.expect_close("snr/2 cmmse vs 1/2 int mmse" + at, 0.5 * snr * c.cmmse, 0.5 * integral, tolerance);
    r.expect_close("mi_rate vs 1/2 int mmse" + at, c.mi_rate, 0.5 * integral, tolerance);
  }
  return r;
}

Report spectral_ratio_check(const SpectrumModel& s, std::span<const double> high_snr, double high_band,
                            double low_snr, double low_band) {
  Report r;
  r.suite = "spectral_ratios";
  for (double snr : high_snr) {
    const auto q = spectral_quantities(s, snr);
    r.expect_close("cmmse/mmse snr=" + std::to_string(snr), q.cmmse / q.mmse, 2.0, 2.0 * high_band);
  }
  const auto q0 = spectral_quantities(s, 0.0);
  const auto q = spectral_quantities(s, low_snr);
  r.expect_close("(mmse(0)-mmse)/(cmmse(0)-cmmse) snr=" + std::to_string(low_snr),
                 (q0.mmse - q.mmse) / (q0.cmmse - q.cmmse), 2.0, low_band);
  return r;
}

}  // namespace immse
