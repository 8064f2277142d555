#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <string>

namespace pathforms {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int R, int C>
using Mat = Eigen::Matrix<double, R, C>;

using Vec3 = Vec<3>;
using Vec4 = Vec<4>;
using Mat3 = Mat<3, 3>;
using Mat4 = Mat<4, 4>;

constexpr int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Largest dimension of an exterior power of R^d.
constexpr int max_ext_dim(int d) { return binomial(d, d / 2); }

template <int D>
using ExtVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, max_ext_dim(D), 1>;

template <int D>
using ExtMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, max_ext_dim(D), max_ext_dim(D)>;

inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  return m;
}

inline Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace pathforms
