#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace immse {

using Engine = std::mt19937_64;

// splitmix64 finalizer applied to (seed, index); every Monte Carlo task owns
// the substream make_engine(seed, task_index).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);
Engine make_engine(std::uint64_t seed, std::uint64_t index);

struct McConfig {
  std::uint64_t seed = 20050401;
  std::size_t paths = 100000;  // paths or independent draws
  double dt = 1e-3;
  double T = 10.0;
  double burn_in = -1.0;  // negative: model default (10 / nu for the telegraph)
  unsigned threads = 0;   // 0: hardware concurrency

  void validate() const;
  unsigned resolved_threads() const;
};

// Running mean/variance (Welford); merge() is Chan's pairwise update, so a
// fixed merge order gives bit-identical results regardless of thread count.
class Stats {
 public:
  void add(double x);
  void merge(const Stats& o);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double se() const;        // standard error of the mean

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Evaluates f(i) for i in [0, n) on up to `threads` workers and returns the
// results in index order. The first exception thrown by any task is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, unsigned threads, F&& f) {
  std::vector<R> out(n);
  if (n == 0) return out;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            out[i] = f(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
            next.store(n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// Splits `draws` into fixed-size blocks; block b runs body(engine_b, count_b)
// with engine_b = make_engine(seed, b) and returns a vector of Stats, one per
// tracked quantity. Blocks are merged in index order.
template <class Body>
std::vector<Stats> mc_blocks(std::uint64_t seed, std::size_t draws, unsigned threads, Body&& body,
                             std::size_t block = 4096) {
  const std::size_t nblocks = (draws + block - 1) / block;
  auto parts = parallel_map<std::vector<Stats>>(nblocks, threads, [&](std::size_t b) {
    Engine eng = make_engine(seed, b);
    const std::size_t count = std::min(block, draws - b * block);
    return body(eng, count);
  });
  std::vector<Stats> total;
  for (const auto& p : parts) {
    if (total.empty()) total.resize(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) total[k].merge(p[k]);
  }
  return total;
}

// Two-sample Kolmogorov-Smirnov statistic sup|F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Asymptotic p-value of the two-sample statistic d for sample sizes n, m.
double ks_pvalue(double d, std::size_t n, std::size_t m);

}  // namespace immse
