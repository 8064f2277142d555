#pragma once

// Counter-based normal increments.  Each (seed, path, step, block) tuple maps
// to one Philox4x32-10 output, so any path can be regenerated independently
// of thread scheduling.

#include "pathforms/linalg.hpp"

#include <array>
#include <cstdint>
#include <numbers>

namespace pathforms {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
  }
};

/// Standard normals for (seed, path, step, block): four per block.
inline std::array<double, 4> normal_block(std::uint64_t seed, std::uint64_t path,
                                          std::uint32_t step, std::uint32_t block) {
  Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  Philox4x32::Counter ctr{step, block, static_cast<std::uint32_t>(path),
                          static_cast<std::uint32_t>(path >> 32)};
  auto u = Philox4x32::generate(ctr, key);
  constexpr double k = 1.0 / 4294967296.0;
  std::array<double, 4> z;
  for (int i = 0; i < 2; ++i) {
    double u1 = (u[2 * i] + 0.5) * k;
    double u2 = (u[2 * i + 1] + 0.5) * k;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    z[2 * i] = r * std::cos(a);
    z[2 * i + 1] = r * std::sin(a);
  }
  return z;
}

/// Brownian increments of one path on a uniform grid.
template <int M>
class NoiseDriver {
 public:
  NoiseDriver(std::uint64_t seed, std::uint64_t path, double h, int steps)
      : seed_(seed), path_(path), h_(h), sqrt_h_(std::sqrt(h)), steps_(steps) {
    require(h > 0 && std::isfinite(h), "NoiseDriver: step size must be positive");
    require(steps >= 0, "NoiseDriver: negative step count");
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path() const { return path_; }
  double h() const { return h_; }
  int steps() const { return steps_; }

  Vec<M> increment(int k) const {
    Vec<M> out;
    for (int b = 0; 4 * b < M; ++b) {
      auto z = normal_block(seed_, path_, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(b));
      for (int i = 0; i < 4 && 4 * b + i < M; ++i) out(4 * b + i) = sqrt_h_ * z[i];
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
  double h_;
  double sqrt_h_;
  int steps_;
};

}  // namespace pathforms
