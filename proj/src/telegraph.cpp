#include "immse/telegraph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "immse/quadrature.hpp"

namespace immse {

void TelegraphModel::validate() const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("TelegraphModel: nu must be > 0");
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::invalid_argument("TelegraphModel: snr must be >= 0");
}

namespace {

// Breakpoints on [0, 10] in units where the Gaussian factor is exp(-w^2),
// refined near w ~ sqrt(kappa) where (1 + w^2 / kappa) turns over.
std::vector<double> scaled_breaks(double kappa) {
  std::vector<double> b{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 10.0};
  const double s = std::sqrt(kappa);
  for (double c : {0.3, 1.0, 3.0})
    if (c * s < 10.0) b.push_back(c * s);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }), b.end());
  return b;
}

void check_xi(double xi) {
  if (!(xi < 0.0) || !std::isfinite(xi)) throw std::invalid_argument("f_integral: xi must be finite and < 0");
}

}  // namespace

double f_integral_scaled(int i, int j, double xi) {
  check_xi(xi);
  if (j < -1) throw std::invalid_argument("f_integral: j must be >= -1");
  // v = w / sqrt(kappa):  2 kappa^(-(j+2)/2) int_0^inf w^(j+1) (1 + w^2/kappa)^(i/2) exp(-w^2) dw
  const double kappa = -xi;
  const double hi = 0.5 * i;
  auto f = [&](double w) {
    const double w2 = w * w;
    return std::pow(w, j + 1) * std::pow(1.0 + w2 / kappa, hi) * std::exp(-w2);
  };
  const auto br = scaled_breaks(kappa);
  AdaptiveOptions opts{0.0, 1e-14, 4000};
  const double v = integrate_adaptive(f, br, opts).value;
  return 2.0 * std::pow(kappa, -0.5 * (j + 2)) * v;
}

double f_integral(int i, int j, double xi) { return std::exp(xi) * f_integral_scaled(i, j, xi); }

FIntegralTable FIntegralTable::compute(double xi) {
  FIntegralTable t;
  t.xi = xi;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) t.values[a][b] = f_integral(2 * a - 1, 2 * b - 1, xi);
  return t;
}

double FIntegralTable::at(int i, int j) const {
  auto idx = [](int k) {
    if (k != -1 && k != 1 && k != 3) throw std::out_of_range("FIntegralTable: index must be -1, 1 or 3");
    return static_cast<std::size_t>((k + 1) / 2);
  };
  return values[idx(i)][idx(j)];
}

Report f_recurrence_check(double xi, double tolerance) {
  check_xi(xi);
  Report r;
  r.suite = "f_recurrences";
  auto rel = [&](const std::string& name, double lhs, double rhs) {
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    // Compare lhs/scale against rhs/scale so the tolerance is relative.
    r.expect_close(name, lhs / scale, rhs / scale, tolerance);
  };
  const std::string at = " xi=" + std::to_string(xi);
  for (int i : {-1, 1, 3}) {
    for (int j : {-1, 1, 3}) {
      const std::string ij = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      const double fij = f_integral(i, j, xi);
      rel("partial fractions f" + ij + at, fij, f_integral(i + 2, j, xi) - f_integral(i, j + 2, xi));
      // Five-point derivative in xi against f(i+2, j).
      const double h = 1e-3 * std::abs(xi);
      const double d = (-f_integral(i, j, xi + 2 * h) + 8 * f_integral(i, j, xi + h) - 8 * f_integral(i, j, xi - h) +
                        f_integral(i, j, xi - 2 * h)) /
                       (12 * h);
      rel("xi derivative f" + ij + at, d, f_integral(i + 2, j, xi));
      if (j >= 1) {
        rel("integration by parts f" + ij + at, -xi * fij,
            0.5 * i * f_integral(i - 2, j, xi) + 0.5 * j * f_integral(i, j - 2, xi));
      }
    }
  }
  return r;
}

double telegraph_cmmse(const TelegraphModel& m) {
  m.validate();
  if (m.snr == 0.0) return 1.0;
  const double xi = m.xi();
  return f_integral_scaled(-1, -1, xi) / f_integral_scaled(1, -1, xi);
}

double telegraph_mmse(const TelegraphModel& m, double tolerance) {
  m.validate();
  if (!(tolerance > 0.0)) throw std::invalid_argument("telegraph_mmse: tolerance must be > 0");
  if (m.snr == 0.0) return 1.0;
  // With t = 1 + v^2, u = 1 + w^2 and (v, w) = (r cos a, r sin a) / sqrt(kappa)
  // the ratio becomes
  //   int int r exp(-r^2) g(r cos a) g(r sin a) / (1 + r^2/kappa) dr da
  //   / (int exp(-x^2) g(x) dx)^2,  g(x) = sqrt(1 + x^2/kappa),
  // with a over [0, pi/2] (symmetric about pi/4).
  const double kappa = -m.xi();
  auto g = [kappa](double x) { return std::sqrt(1.0 + x * x / kappa); };
  const auto br = scaled_breaks(kappa);
  const AdaptiveOptions inner{0.0, 0.1 * tolerance, 4000};
  auto radial = [&](double a) {
    const double c = std::cos(a), s = std::sin(a);
    auto f = [&](double r) { return r * std::exp(-r * r) * g(r * c) * g(r * s) / (1.0 + r * r / kappa); };
    return integrate_adaptive(f, br, inner).value;
  };
  const AdaptiveOptions outer{0.0, tolerance, 4000};
  const double num = 2.0 * integrate_adaptive(radial, 0.0, 0.25 * std::numbers::pi, outer).value;
  auto h = [&](double x) { return std::exp(-x * x) * g(x); };
  const double den = integrate_adaptive(h, br, inner).value;
  return num / (den * den);
}

namespace {

// N(xi) = f(-1,-1) f(1,-1) - xi f(1,-1)^2 + xi f(-1,-1) f(3,-1), in the
// exp(-xi)-scaled f (so N is scaled by exp(-2 xi)).
double scaled_numerator(double xi) {
  const double a = f_integral_scaled(-1, -1, xi);
  const double b = f_integral_scaled(1, -1, xi);
  const double c = f_integral_scaled(3, -1, xi);
  return a * b - xi * b * b + xi * a * c;
}

}  // namespace

double telegraph_cmmse_rate_derivative(const TelegraphModel& m) {
  m.validate();
  if (m.snr == 0.0) return 1.0;
  const double xi = m.xi();
  const double b = f_integral_scaled(1, -1, xi);
  return scaled_numerator(xi) / (b * b);
}

Report telegraph_differential_check(double nu, std::span<const double> snr_grid, double tolerance) {
  Report r;
  r.suite = "telegraph_differential";
  for (double s : snr_grid) {
    const TelegraphModel m{nu, s};
    m.validate();
    if (s <= 0.0) throw std::invalid_argument("telegraph_differential_check: snr must be > 0");
    const std::string at = " snr=" + std::to_string(s);
    const double mm = telegraph_mmse(m);
    r.expect_close("mmse vs closed-form d/dsnr[snr cmmse]" + at, mm, telegraph_cmmse_rate_derivative(m), tolerance);
    const double h = 1e-4 * std::max(1.0, s);
    auto sc = [&](double x) { return x * telegraph_cmmse({nu, x}); };
    const double fd = (sc(s + h) - sc(s - h)) / (2 * h);
    r.expect_close("mmse vs central difference of snr cmmse" + at, mm, fd, tolerance);

    // Scaled form of the identity: Ns + dNs/dxi = f_s(1,-1)^2.
    const double xi = m.xi();
    const double a = f_integral_scaled(-1, -1, xi);
    const double b = f_integral_scaled(1, -1, xi);
    const double c = f_integral_scaled(3, -1, xi);
    const double d = f_integral_scaled(5, -1, xi);
    // d/dxi of scaled f(i,j) is f_s(i+2,j) - f_s(i,j).
    const double da = b - a, db = c - b, dc = d - c;
    const double n = a * b - xi * b * b + xi * a * c;
    const double dn = da * b + a * db - b * b - 2 * xi * b * db + a * c + xi * (da * c + a * dc);
    const double target = b * b;
    r.expect_close("identity via recurrences (relative)" + at, (n + dn) / target, 1.0, tolerance);
    const double hx = 1e-3 * std::abs(xi);
    const double dn_fd = (-scaled_numerator(xi + 2 * hx) + 8 * scaled_numerator(xi + hx) -
                          8 * scaled_numerator(xi - hx) + scaled_numerator(xi - 2 * hx)) /
                         (12 * hx);
    r.expect_close("identity via finite difference (relative)" + at, (n + dn_fd) / target, 1.0, tolerance);
  }
  return r;
}

double telegraph_averaged_mmse(double nu, double snr, double tolerance) {
  if (!(snr > 0.0)) throw std::invalid_argument("telegraph_averaged_mmse: snr must be > 0");
  auto f = [&](double g) { return g <= 0.0 ? 1.0 : telegraph_mmse({nu, g}, 1e-12); };
  std::vector<double> br{0.0};
  for (double c : {0.01, 0.1, 1.0, 10.0})
    if (c * nu < snr) br.push_back(c * nu);
  br.push_back(snr);
  return integrate_adaptive(f, br, {tolerance * snr, 0.0, 4000}).value / snr;
}

Report verify_thm7(double nu, std::span<const double> snr_grid, double tolerance, double low_snr,
                   double ratio_tolerance) {
  Report r;
  r.suite = "thm7";
  r.note("The averaged side is E mmse(G) with G ~ Uniform(0, snr).");
  for (double s : snr_grid) {
    const TelegraphModel m{nu, s};
    m.validate();
    const std::string at = " snr=" + std::to_string(s);
    const double c = telegraph_cmmse(m);
    const double mm = telegraph_mmse(m);
    r.expect_close("cmmse vs averaged mmse" + at, c, telegraph_averaged_mmse(nu, s), tolerance);
    r.expect_less_equal("mmse <= cmmse" + at, mm, c);
  }
  if (low_snr > 0.0) {
    const TelegraphModel m{nu, low_snr};
    const double ratio = (1.0 - telegraph_mmse(m)) / (1.0 - telegraph_cmmse(m));
    r.expect_close("low-snr ratio (1-mmse)/(1-cmmse) snr=" + std::to_string(low_snr), ratio, 2.0, ratio_tolerance);
  }
  return r;
}

Report duncan_check(const TelegraphModel& m, double tolerance) {
  m.validate();
  Report r;
  r.suite = "duncan";
  const double a = 0.5 * m.snr * telegraph_cmmse(m);
  const double b = m.snr == 0.0 ? 0.0 : 0.5 * m.snr * telegraph_averaged_mmse(m.nu, m.snr);
  r.expect_close("snr/2 cmmse vs 1/2 int mmse, snr=" + std::to_string(m.snr), a, b, tolerance);
  return r;
}

}  // namespace immse
