#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "immse/input_law.hpp"
#include "immse/random.hpp"
#include "immse/report.hpp"
#include "immse/scalar_channel.hpp"
#include "immse/telegraph.hpp"

namespace immse {

// Grid t_k = k dt, k = 0..n. x[k] = X(t_k); dy[k] is the observation
// increment over (t_{k-1}, t_k], with dy[0] = 0.
struct SamplePath {
  double dt = 0.0;
  std::vector<double> x;
  std::vector<double> dy;

  double horizon() const { return dt * static_cast<double>(x.empty() ? 0 : x.size() - 1); }
};

// Throws StepTooLarge unless dt <= 0.01 / max(nu, snr).
void check_filter_step(const TelegraphModel& m, double dt);
// Largest step allowed by the precondition, capped at 1e-3.
double default_filter_step(const TelegraphModel& m);

// Stationary start, exact exponential holding times; dY integrates X exactly
// over each step.
SamplePath simulate_telegraph(const TelegraphModel& m, double T, double dt, std::uint64_t seed);

// Time reversal: the returned path is indexed by s_k = T - t_{n-k}.
SamplePath reversed(const SamplePath& path);

// Posterior mean E[X(t_k) | dy_1..dy_k] from Xhat_0 = 0. Each step applies the
// exact flow of the drift (Xhat -> exp(-2 nu h) Xhat over half a step), the
// exact observation update in log-likelihood-ratio form
// (atanh Xhat += sqrt(snr) dy) and the second half drift. Output clamped to
// [-1 + 1e-12, 1 - 1e-12].
std::vector<double> wonham_filter(const SamplePath& path, const TelegraphModel& m);

// Filter run on the reversed path, re-indexed to forward time: entry k is
// E[X(t_k) | dy_{k+1}..dy_n].
std::vector<double> anticausal_filter(const SamplePath& path, const TelegraphModel& m);

// (f + b) / (1 + f b) elementwise.
std::vector<double> yao_smoother(std::span<const double> forward, std::span<const double> backward);

struct WonhamEnsemble {
  McEstimate causal;
  McEstimate anticausal;
  McEstimate smoothed;
  McEstimate causal_minus_anticausal;  // paired per path
  double burn_in = 0.0;
  double dt = 0.0;
};

// mc.paths independent paths on [0, B + T + B] (B = burn-in, default 10/nu);
// per path the squared errors are averaged over the grid points of [B, B + T).
// Path p uses make_engine(mc.seed, p).
WonhamEnsemble wonham_ensemble(const TelegraphModel& m, const McConfig& mc);

// Empirical causal, smoothed and anticausal errors against the closed forms
// (3 SE) and each other.
Report wonham_check(const TelegraphModel& m, const McConfig& mc, double se_multiple = 3.0);
// The same checks on an ensemble already computed with `mc`.
Report wonham_report(const TelegraphModel& m, const McConfig& mc, const WonhamEnsemble& e, double se_multiple = 3.0);

// Causal error at dt and dt/2 on common paths: both filters read the same
// simulated path at resolution dt/2 (the coarse filter sums pairs of
// increments), errors taken on the common coarse grid. Requires
// |difference| < SE of the dt estimate.
Report wonham_dt_halving_check(const TelegraphModel& m, const McConfig& mc);

// Constant input X ~ law on [0, T]: Y_u = sqrt(snr) u X + W_u, causal
// estimate E[X | Y_u] = posterior mean at snr u given Y_u / sqrt(u).
// Checks the empirical error at each u in u_points against mmse(law, snr u)
// and the trapezoid time average against (1/(snr T)) int_0^{snr T} mmse.
Report time_snr_transform_check(const InputLaw& law, double snr, double T, const McConfig& mc,
                                std::span<const double> u_points, double se_multiple = 3.0);

}  // namespace immse
