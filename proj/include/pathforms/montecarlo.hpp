#pragma once

// Parallel Monte Carlo over path indices.  Every path is a pure function of
// (seed, index); samples are stored by index and reduced in index order, so
// the result does not depend on the number of threads.

#include "pathforms/linalg.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pathforms {

/// Threads from PATHFORMS_THREADS, else the hardware count.
inline int default_threads() {
  if (const char* env = std::getenv("PATHFORMS_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1 && n <= 1024) return static_cast<int>(n);
    throw std::invalid_argument("PATHFORMS_THREADS must be a positive integer, got '" +
                                std::string(env) + "'");
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct McParams {
  double t = 0.5;
  double h = 1e-3;
  std::size_t paths = 200000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: default_threads()
  std::uint64_t digest = 0;
};

struct EstimatorReport {
  std::string formula;
  std::string manifold;
  int q = 0;
  double t = 0;
  double h = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t digest = 0;
  double value = 0;
  double std_error = 0;
  std::vector<double> samples;
};

inline constexpr std::size_t kReduceChunk = 4096;

/// Mean and standard error sample-std / sqrt(n), summed chunk by chunk in
/// index order.
inline void summarize(EstimatorReport& r) {
  const auto& s = r.samples;
  r.n = s.size();
  if (s.empty()) {
    r.value = r.std_error = 0;
    return;
  }
  auto chunked = [&](auto term) {
    double total = 0;
    for (std::size_t c = 0; c < s.size(); c += kReduceChunk) {
      double part = 0;
      std::size_t e = std::min(s.size(), c + kReduceChunk);
      for (std::size_t i = c; i < e; ++i) part += term(s[i]);
      total += part;
    }
    return total;
  };
  double n = static_cast<double>(s.size());
  double mean = chunked([](double v) { return v; }) / n;
  double ss = chunked([mean](double v) { return (v - mean) * (v - mean); });
  r.value = mean;
  r.std_error = s.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
}

/// Calls work(i, worker) for i in [0, n) on a pool of threads; paths are
/// handed out in fixed chunks.  The first exception is rethrown after join.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, int)>& work,
                         std::size_t chunk = 256) {
  int nt = threads > 0 ? threads : default_threads();
  nt = static_cast<int>(std::min<std::size_t>(nt, std::max<std::size_t>(1, (n + chunk - 1) / chunk)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_lock;
  auto body = [&](int worker) {
    try {
      for (;;) {
        if (failed.load()) return;
        std::size_t b = next.fetch_add(chunk);
        if (b >= n) return;
        std::size_t e = std::min(n, b + chunk);
        for (std::size_t i = b; i < e; ++i) work(i, worker);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_lock);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };
  if (nt == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

/// Difference of two reports computed on the same paths.
inline EstimatorReport paired_compare(const EstimatorReport& a, const EstimatorReport& b) {
  std::string why;
  if (a.seed != b.seed) why = "seeds differ";
  else if (a.manifold != b.manifold) why = "manifolds differ";
  else if (a.t != b.t || a.h != b.h) why = "time grids differ";
  else if (a.samples.size() != b.samples.size()) why = "path counts differ";
  if (!why.empty())
    throw std::invalid_argument("paired_compare: " + a.formula + " vs " + b.formula + ": " + why);
  EstimatorReport d = a;
  d.formula = a.formula + "-" + b.formula;
  for (std::size_t i = 0; i < d.samples.size(); ++i) d.samples[i] = a.samples[i] - b.samples[i];
  summarize(d);
  return d;
}

/// |value - target| <= k standard errors.
inline bool within_se(const EstimatorReport& r, double target, double k = 3.0) {
  return std::abs(r.value - target) <= k * r.std_error;
}

}  // namespace pathforms
