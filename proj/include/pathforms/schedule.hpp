#pragma once

// Deterministic scalar weights on [0, T]: the rho of the derivative formulas
// and the lambda of the two-vector fields.

#include "pathforms/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace pathforms {

class ScalarSchedule {
 public:
  enum class Kind { constant, power, sine, grid };

  static ScalarSchedule constant(double c) { return ScalarSchedule(Kind::constant, c, 0, 1); }
  /// s -> c s^p
  static ScalarSchedule power(double p, double c = 1.0) {
    require(p >= 0, "schedule: power must be non-negative");
    return ScalarSchedule(Kind::power, c, p, 1);
  }
  /// s -> sin(pi s / (2 T))
  static ScalarSchedule sine(double horizon) {
    require(horizon > 0, "schedule: sine needs a positive horizon");
    return ScalarSchedule(Kind::sine, 1, 0, horizon);
  }
  /// Piecewise constant values on [k h, (k+1) h).
  static ScalarSchedule grid(std::vector<double> values, double h) {
    require(!values.empty() && h > 0, "schedule: empty grid");
    ScalarSchedule s(Kind::grid, 1, 0, h);
    s.values_ = std::move(values);
    return s;
  }

  /// Names accepted in configuration files.
  static ScalarSchedule named(const std::string& name, double horizon) {
    if (name == "one") return constant(1.0);
    if (name == "linear") return power(1.0);
    if (name == "square") return power(2.0);
    if (name == "sine") return sine(horizon);
    throw std::invalid_argument("unknown schedule '" + name +
                                "' (valid: one, linear, square, sine)");
  }

  Kind kind() const { return kind_; }

  double value(double s) const {
    switch (kind_) {
      case Kind::constant: return c_;
      case Kind::power: return p_ == 0 ? c_ : c_ * std::pow(s, p_);
      case Kind::sine: return std::sin(half_pi() * s / t_);
      case Kind::grid: return values_[index(s)];
    }
    return 0;
  }

  double derivative(double s) const {
    switch (kind_) {
      case Kind::constant: return 0;
      case Kind::power: return p_ == 0 ? 0 : c_ * p_ * std::pow(s, p_ - 1);
      case Kind::sine: return half_pi() / t_ * std::cos(half_pi() * s / t_);
      case Kind::grid: return 0;
    }
    return 0;
  }

  /// Exact integral over [0, s].
  double integral(double s) const {
    switch (kind_) {
      case Kind::constant: return c_ * s;
      case Kind::power: return c_ * std::pow(s, p_ + 1) / (p_ + 1);
      case Kind::sine: return t_ / half_pi() * (1 - std::cos(half_pi() * s / t_));
      case Kind::grid: {
        double total = 0;
        int k = index(s);
        for (int i = 0; i < k; ++i) total += values_[i] * t_;
        return total + values_[k] * (s - k * t_);
      }
    }
    return 0;
  }

  /// Values at t_k = k h for k = 0..n.
  std::vector<double> sample(double h, int n) const {
    std::vector<double> out(n + 1);
    for (int k = 0; k <= n; ++k) out[k] = value(k * h);
    return out;
  }

 private:
  ScalarSchedule(Kind k, double c, double p, double t) : kind_(k), c_(c), p_(p), t_(t) {}

  static double half_pi() { return 0.5 * std::acos(-1.0); }

  int index(double s) const {
    int k = static_cast<int>(std::floor(s / t_ + 1e-9));
    return std::clamp(k, 0, static_cast<int>(values_.size()) - 1);
  }

  Kind kind_;
  double c_, p_, t_;
  std::vector<double> values_;
};

}  // namespace pathforms
