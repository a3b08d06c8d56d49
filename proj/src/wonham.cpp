#include "immse/wonham.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "immse/error.hpp"
#include "immse/quadrature.hpp"

namespace immse {

namespace {

constexpr double kClamp = 1.0 - 1e-12;
constexpr std::size_t kChunk = 64;  // paths per task; fixed so merges do not depend on threads

std::size_t steps_for(double span, double dt) {
  const double n = span / dt;
  const auto k = static_cast<std::size_t>(std::llround(n));
  if (std::abs(n - static_cast<double>(k)) > 1e-6 * std::max(1.0, n))
    throw std::invalid_argument("time span " + std::to_string(span) + " is not a multiple of dt " + std::to_string(dt));
  return k;
}

class TelegraphSim {
 public:
  TelegraphSim(const TelegraphModel& m, double h, Engine& eng)
      : root_snr_(std::sqrt(m.snr)), h_(h), root_h_(std::sqrt(h)), exp_(m.nu) {
    x_ = boost::random::uniform_01<double>()(eng) < 0.5 ? -1.0 : 1.0;
    tau_ = exp_(eng);
  }

  double x() const { return x_; }

  // Advances by h; returns the observation increment.
  double step(Engine& eng) {
    double rem = h_, integral = 0.0;
    while (tau_ <= rem) {
      integral += x_ * tau_;
      rem -= tau_;
      x_ = -x_;
      tau_ = exp_(eng);
    }
    integral += x_ * rem;
    tau_ -= rem;
    return root_snr_ * integral + root_h_ * normal_(eng);
  }

 private:
  double root_snr_;
  double h_;
  double root_h_;
  double x_ = 1.0;
  double tau_ = 0.0;
  boost::random::exponential_distribution<double> exp_;
  boost::random::normal_distribution<double> normal_;
};

struct FilterStep {
  double half_decay;  // exp(-nu dt)
  double root_snr;

  FilterStep(const TelegraphModel& m, double dt) : half_decay(std::exp(-m.nu * dt)), root_snr(std::sqrt(m.snr)) {}

  double gain(double dy) const { return std::tanh(root_snr * dy); }

  // t = gain(dy).
  double update(double xh, double t) const {
    xh *= half_decay;
    xh = (xh + t) / (1.0 + xh * t);
    xh *= half_decay;
    return std::clamp(xh, -kClamp, kClamp);
  }

  double operator()(double xh, double dy) const { return update(xh, gain(dy)); }
};

double yao(double f, double b) { return (f + b) / (1.0 + f * b); }

double resolve_burn_in(const TelegraphModel& m, const McConfig& mc) {
  return mc.burn_in < 0.0 ? 10.0 / m.nu : mc.burn_in;
}

template <std::size_t N, class PathFn>
std::array<Stats, N> run_paths(const McConfig& mc, PathFn&& per_path) {
  const std::size_t chunks = (mc.paths + kChunk - 1) / kChunk;
  auto parts = parallel_map<std::array<Stats, N>>(chunks, mc.resolved_threads(), [&](std::size_t c) {
    std::array<Stats, N> s;
    auto scratch = per_path.make_scratch();
    const std::size_t end = std::min(mc.paths, (c + 1) * kChunk);
    for (std::size_t p = c * kChunk; p < end; ++p) {
      Engine eng = make_engine(mc.seed, p);
      const auto v = per_path(eng, scratch);
      for (std::size_t k = 0; k < N; ++k) s[k].add(v[k]);
    }
    return s;
  });
  std::array<Stats, N> total;
  for (const auto& p : parts)
    for (std::size_t k = 0; k < N; ++k) total[k].merge(p[k]);
  return total;
}

McEstimate estimate(const Stats& s) { return {s.mean(), s.se(), s.count()}; }

}  // namespace

void check_filter_step(const TelegraphModel& m, double dt) {
  m.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const double limit = 0.01 / std::max(m.nu, m.snr);
  if (dt > limit * (1.0 + 1e-12))
    throw StepTooLarge("dt = " + std::to_string(dt) + " exceeds 0.01 / max(nu, snr) = " + std::to_string(limit));
}

double default_filter_step(const TelegraphModel& m) {
  m.validate();
  return std::min(1e-3, 0.01 / std::max(m.nu, m.snr));
}

SamplePath simulate_telegraph(const TelegraphModel& m, double T, double dt, std::uint64_t seed) {
  m.validate();
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("simulate_telegraph: T and dt must be > 0");
  const std::size_t n = steps_for(T, dt);
  Engine eng = make_engine(seed, 0);
  TelegraphSim sim(m, dt, eng);
  SamplePath p;
  p.dt = dt;
  p.x.resize(n + 1);
  p.dy.resize(n + 1);
  p.x[0] = sim.x();
  p.dy[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    p.dy[k] = sim.step(eng);
    p.x[k] = sim.x();
  }
  return p;
}

SamplePath reversed(const SamplePath& path) {
  SamplePath r;
  r.dt = path.dt;
  const std::size_t n1 = path.x.size();
  if (path.dy.size() != n1) throw std::invalid_argument("SamplePath: x and dy lengths differ");
  r.x.assign(path.x.rbegin(), path.x.rend());
  r.dy.assign(n1, 0.0);
  for (std::size_t k = 1; k < n1; ++k) r.dy[k] = path.dy[n1 - k];
  return r;
}

std::vector<double> wonham_filter(const SamplePath& path, const TelegraphModel& m) {
  check_filter_step(m, path.dt);
  if (path.dy.size() != path.x.size()) throw std::invalid_argument("SamplePath: x and dy lengths differ");
  const FilterStep step(m, path.dt);
  std::vector<double> out(path.dy.size());
  double xh = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k > 0) xh = step(xh, path.dy[k]);
    out[k] = xh;
  }
  return out;
}

std::vector<double> anticausal_filter(const SamplePath& path, const TelegraphModel& m) {
  auto b = wonham_filter(reversed(path), m);
  std::reverse(b.begin(), b.end());
  return b;
}

std::vector<double> yao_smoother(std::span<const double> forward, std::span<const double> backward) {
  if (forward.size() != backward.size()) throw std::invalid_argument("yao_smoother: sequence lengths differ");
  std::vector<double> out(forward.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = yao(forward[k], backward[k]);
  return out;
}

WonhamEnsemble wonham_ensemble(const TelegraphModel& m, const McConfig& mc) {
  mc.validate();
  check_filter_step(m, mc.dt);
  const double burn = resolve_burn_in(m, mc);
  const std::size_t kb = steps_for(burn, mc.dt);
  const std::size_t nt = steps_for(mc.T, mc.dt);
  const std::size_t n = 2 * kb + nt;
  const FilterStep step(m, mc.dt);

  struct PerPath {
    const TelegraphModel& m;
    const FilterStep& step;
    double dt;
    std::size_t kb, nt, n;

    struct Scratch {
      std::vector<double> gain;  // tanh(sqrt(snr) dy), shared by both filter directions
      std::vector<signed char> x;
      std::vector<double> fwd;
    };
    Scratch make_scratch() const { return {std::vector<double>(n + 1), std::vector<signed char>(n + 1), std::vector<double>(nt)}; }

    std::array<double, 4> operator()(Engine& eng, Scratch& s) const {
      TelegraphSim sim(m, dt, eng);
      s.x[0] = static_cast<signed char>(sim.x());
      double xh = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        s.gain[k] = step.gain(sim.step(eng));
        s.x[k] = static_cast<signed char>(sim.x());
        xh = step.update(xh, s.gain[k]);
        if (k >= kb && k < kb + nt) s.fwd[k - kb] = xh;
      }
      // kb == 0 means the window starts at t = 0 where the causal estimate is the prior mean.
      if (kb == 0) s.fwd[0] = 0.0;
      double c = 0.0, a = 0.0, sm = 0.0;
      double b = 0.0;
      for (std::size_t k = n; k-- > kb;) {
        b = step.update(b, s.gain[k + 1]);
        if (k < kb + nt) {
          const double x = s.x[k];
          const double f = s.fwd[k - kb];
          c += (x - f) * (x - f);
          a += (x - b) * (x - b);
          const double y = yao(f, b);
          sm += (x - y) * (x - y);
        }
      }
      const double inv = 1.0 / static_cast<double>(nt);
      return {c * inv, a * inv, sm * inv, (c - a) * inv};
    }
  };

  const auto s = run_paths<4>(mc, PerPath{m, step, mc.dt, kb, nt, n});
  WonhamEnsemble e;
  e.causal = estimate(s[0]);
  e.anticausal = estimate(s[1]);
  e.smoothed = estimate(s[2]);
  e.causal_minus_anticausal = estimate(s[3]);
  e.burn_in = burn;
  e.dt = mc.dt;
  return e;
}

Report wonham_check(const TelegraphModel& m, const McConfig& mc, double se_multiple) {
  return wonham_report(m, mc, wonham_ensemble(m, mc), se_multiple);
}

Report wonham_report(const TelegraphModel& m, const McConfig& mc, const WonhamEnsemble& e, double se_multiple) {
  const double c = telegraph_cmmse(m);
  const double mm = telegraph_mmse(m);
  Report r;
  r.suite = "wonham";
  r.expect_close("causal MSE vs cmmse", e.causal.value, c, se_multiple * e.causal.se);
  r.expect_close("smoothed MSE vs mmse", e.smoothed.value, mm, se_multiple * e.smoothed.se);
  r.expect_close("causal - anticausal MSE vs 0", e.causal_minus_anticausal.value, 0.0,
                 se_multiple * e.causal_minus_anticausal.se);
  r.expect_less_equal("smoothed MSE <= causal MSE", e.smoothed.value, e.causal.value);
  r.note("paths=" + std::to_string(mc.paths) + " dt=" + std::to_string(e.dt) + " T=" + std::to_string(mc.T) +
         " burn_in=" + std::to_string(e.burn_in) + " seed=" + std::to_string(mc.seed));
  r.note("causal " + std::to_string(e.causal.value) + " +- " + std::to_string(e.causal.se) + ", smoothed " +
         std::to_string(e.smoothed.value) + " +- " + std::to_string(e.smoothed.se));
  return r;
}

Report wonham_dt_halving_check(const TelegraphModel& m, const McConfig& mc) {
  mc.validate();
  check_filter_step(m, mc.dt);
  const double burn = resolve_burn_in(m, mc);
  const std::size_t kb = steps_for(burn, mc.dt);
  const std::size_t nt = steps_for(mc.T, mc.dt);
  const double h = 0.5 * mc.dt;
  const FilterStep coarse(m, mc.dt), fine(m, h);

  struct PerPath {
    const TelegraphModel& m;
    const FilterStep &coarse, &fine;
    double h;
    std::size_t kb, nt;
    int make_scratch() const { return 0; }
    std::array<double, 3> operator()(Engine& eng, int&) const {
      TelegraphSim sim(m, h, eng);
      double xc = 0.0, xf = 0.0, ec = 0.0, ef = 0.0;
      for (std::size_t k = 1; k < kb + nt; ++k) {
        const double d1 = sim.step(eng);
        xf = fine(xf, d1);
        const double d2 = sim.step(eng);
        xf = fine(xf, d2);
        xc = coarse(xc, d1 + d2);
        if (k >= kb) {
          const double x = sim.x();
          ec += (x - xc) * (x - xc);
          ef += (x - xf) * (x - xf);
        }
      }
      if (kb == 0) {
        ec += 1.0;
        ef += 1.0;
      }
      const double inv = 1.0 / static_cast<double>(nt);
      return {ec * inv, ef * inv, (ec - ef) * inv};
    }
  };

  const auto s = run_paths<3>(mc, PerPath{m, coarse, fine, h, kb, nt});
  Report r;
  r.suite = "wonham_dt_halving";
  r.expect_close("causal MSE at dt vs dt/2 (within one SE)", s[0].mean(), s[1].mean(), s[0].se());
  r.note("dt=" + std::to_string(mc.dt) + ": " + std::to_string(s[0].mean()) + " +- " + std::to_string(s[0].se()) +
         "; dt/2: " + std::to_string(s[1].mean()) + "; paired difference " + std::to_string(s[2].mean()) + " +- " +
         std::to_string(s[2].se()));
  return r;
}

Report time_snr_transform_check(const InputLaw& law, double snr, double T, const McConfig& mc,
                                std::span<const double> u_points, double se_multiple) {
  mc.validate();
  if (!(snr > 0.0)) throw std::invalid_argument("time_snr_transform_check: snr must be > 0");
  const std::size_t n = steps_for(T, mc.dt);
  std::vector<std::size_t> idx;
  for (double u : u_points) {
    if (u < 0.0 || u > T) throw std::invalid_argument("time_snr_transform_check: u outside [0, T]");
    idx.push_back(static_cast<std::size_t>(std::llround(u / mc.dt)));
  }
  const Sampler draw(law);
  const double mean = moments(law).mean;
  const double rs = std::sqrt(snr);
  const double sdt = std::sqrt(mc.dt);

  // Per path: trapezoid time average followed by the errors at u_points.
  const std::size_t q = idx.size() + 1;
  const std::size_t chunks = (mc.paths + kChunk - 1) / kChunk;
  auto parts = parallel_map<std::vector<Stats>>(chunks, mc.resolved_threads(), [&](std::size_t c) {
    std::vector<Stats> s(q);
    boost::random::normal_distribution<double> normal;
    std::vector<double> err(n + 1);
    const std::size_t end = std::min(mc.paths, (c + 1) * kChunk);
    for (std::size_t p = c * kChunk; p < end; ++p) {
      Engine eng = make_engine(mc.seed, p);
      const double x = draw(eng);
      double w = 0.0;
      err[0] = (x - mean) * (x - mean);
      for (std::size_t k = 1; k <= n; ++k) {
        w += sdt * normal(eng);
        const double u = static_cast<double>(k) * mc.dt;
        const double y = rs * u * x + w;
        const double est = posterior_at(law, snr * u, y / std::sqrt(u)).mean;
        err[k] = (x - est) * (x - est);
      }
      double avg = 0.5 * (err[0] + err[n]);
      for (std::size_t k = 1; k < n; ++k) avg += err[k];
      s[0].add(avg / static_cast<double>(n));
      for (std::size_t i = 0; i < idx.size(); ++i) s[i + 1].add(err[idx[i]]);
    }
    return s;
  });
  std::vector<Stats> total(q);
  for (const auto& p : parts)
    for (std::size_t k = 0; k < q; ++k) total[k].merge(p[k]);

  Report r;
  r.suite = "time_snr_transform";
  const double top = snr * T;
  auto f = [&](double g) { return mmse(ScalarChannel(law, g)); };
  std::vector<double> br{0.0};
  for (double b : {0.1, 1.0, 10.0})
    if (b < top) br.push_back(b);
  br.push_back(top);
  const double avg = integrate_adaptive(f, br, {1e-9 * top, 0.0, 4000}).value / top;
  r.expect_close("time-averaged causal MSE vs averaged mmse", total[0].mean(), avg, se_multiple * total[0].se());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double u = static_cast<double>(idx[i]) * mc.dt;
    const double target = f(snr * u);
    const double tol = std::max(se_multiple * total[i + 1].se(), 1e-12);
    r.expect_close("causal MSE at u=" + std::to_string(u) + " vs mmse(u snr)", total[i + 1].mean(), target, tol);
  }
  r.note("paths=" + std::to_string(mc.paths) + " dt=" + std::to_string(mc.dt) + " seed=" + std::to_string(mc.seed));
  return r;
}

}  // namespace immse
