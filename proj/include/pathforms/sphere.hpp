#pragma once

// Round unit spheres S^N in R^(N+1) with the gradient Brownian system
// X(x)e = e - <x,e> x (noise dimension N+1), and the flat Clifford torus
// S^1 x S^1 in R^4 with the product gradient system.

#include "pathforms/manifold.hpp"

namespace pathforms {

namespace detail {

// Minimal rotation taking unit x to unit y, identity on span{x,y}^perp.
template <int A>
Mat<A, A> rodrigues(const Vec<A>& x, const Vec<A>& y) {
  double c = x.dot(y);
  if (c <= -1.0 + 1e-12) throw std::domain_error("transport_step: antipodal points");
  Mat<A, A> k = y * x.transpose() - x * y.transpose();
  return Mat<A, A>::Identity() + k + (k * k) / (1.0 + c);
}

// Orthonormal basis of x^perp from a Householder reflection.
template <int A>
Mat<A, A - 1> householder_frame(const Vec<A>& x) {
  int j = 0;
  x.cwiseAbs().maxCoeff(&j);
  Vec<A> w = x;
  w(j) += (x(j) >= 0 ? 1.0 : -1.0);
  Mat<A, A> h = Mat<A, A>::Identity() - (2.0 / w.squaredNorm()) * (w * w.transpose());
  Mat<A, A - 1> f;
  for (int c = 0, k = 0; c < A; ++c)
    if (c != j) f.col(k++) = h.col(c);
  return f;
}

}  // namespace detail

template <int N>
class Sphere {
 public:
  static constexpr int kAmbient = N + 1;
  static constexpr int kTangent = N + 1;
  static constexpr int kNoise = N + 1;
  static constexpr int kDim = N;
  using Point = Vec<N + 1>;
  using TVec = Vec<N + 1>;
  using Noise = Vec<N + 1>;
  using AMat = Mat<N + 1, N + 1>;

  std::string name() const { return "sphere" + std::to_string(N); }
  bool is_gradient() const { return true; }

  double constraint_violation(const Point& x) const { return std::abs(x.norm() - 1.0); }

  Point project(const Point& x) const { return x / x.norm(); }

  AMat project_jacobian(const Point& x) const {
    double r = x.norm();
    Point u = x / r;
    return (AMat::Identity() - u * u.transpose()) / r;
  }

  Point velocity(const Point& x, const Noise& e, double) const { return e - x.dot(e) * x; }

  AMat velocity_jacobian(const Point& x, const Noise& e, double) const {
    return -x.dot(e) * AMat::Identity() - x * e.transpose();
  }

  AMat embed(const Point&) const { return AMat::Identity(); }
  AMat coords(const Point&) const { return AMat::Identity(); }
  AMat tangent_projector(const Point& x) const { return AMat::Identity() - x * x.transpose(); }
  AMat x_map(const Point& x) const { return tangent_projector(x); }
  AMat y_map(const Point& x) const { return tangent_projector(x); }
  Mat<N + 1, N> frame(const Point& x) const { return detail::householder_frame<N + 1>(x); }
  Mat<N + 1, 1> normal_frame(const Point& x) const { return x; }

  TVec torsion(const Point&, const TVec&, const TVec&) const { return TVec::Zero(); }
  Noise dy(const Point&, const TVec&, const TVec&) const { return Noise::Zero(); }

  ExtMat<N + 1> ricci(const Point& x) const { return (N - 1.0) * tangent_projector(x); }
  ExtMat<N + 1> curvature_operator(const Point& x) const {
    return compound<N + 1, N + 1>(tangent_projector(x), 2);
  }
  std::optional<double> constant_curvature() const { return 1.0; }
  bool breve_is_flat() const { return false; }

  // All three connections coincide with Levi-Civita for a gradient system.
  AMat transport_step(const Point& x, const Point& y, Connection) const {
    return detail::rodrigues<N + 1>(x, y) * tangent_projector(x);
  }

  Point chart(const Point& x, const TVec& v) const {
    TVec w = tangent_projector(x) * v;
    double th = w.norm();
    if (th < 1e-300) return x;
    return std::cos(th) * x + (std::sin(th) / th) * w;
  }
};

using Sphere1 = Sphere<1>;
using Sphere2 = Sphere<2>;
using Sphere3 = Sphere<3>;

/// Flat torus {(cos a, sin a, cos b, sin b)} in R^4.
class CliffordTorus {
 public:
  static constexpr int kAmbient = 4;
  static constexpr int kTangent = 4;
  static constexpr int kNoise = 4;
  static constexpr int kDim = 2;
  using Point = Vec4;
  using TVec = Vec4;
  using Noise = Vec4;
  using AMat = Mat4;

  static Point from_angles(double a, double b) {
    return Point(std::cos(a), std::sin(a), std::cos(b), std::sin(b));
  }

  std::string name() const { return "clifford_torus"; }
  bool is_gradient() const { return true; }

  double constraint_violation(const Point& x) const {
    return std::max(std::abs(x.head<2>().norm() - 1.0), std::abs(x.tail<2>().norm() - 1.0));
  }

  Point project(const Point& x) const {
    Point y;
    y << x.head<2>().normalized(), x.tail<2>().normalized();
    return y;
  }

  AMat project_jacobian(const Point& x) const {
    AMat j = AMat::Zero();
    for (int b = 0; b < 2; ++b) {
      Vec<2> u = x.segment<2>(2 * b);
      double r = u.norm();
      u /= r;
      j.block<2, 2>(2 * b, 2 * b) = (Mat<2, 2>::Identity() - u * u.transpose()) / r;
    }
    return j;
  }

  Point velocity(const Point& x, const Noise& e, double) const {
    Point v;
    for (int b = 0; b < 2; ++b) {
      Vec<2> u = x.segment<2>(2 * b), f = e.segment<2>(2 * b);
      v.segment<2>(2 * b) = f - u.dot(f) * u;
    }
    return v;
  }

  AMat velocity_jacobian(const Point& x, const Noise& e, double) const {
    AMat j = AMat::Zero();
    for (int b = 0; b < 2; ++b) {
      Vec<2> u = x.segment<2>(2 * b), f = e.segment<2>(2 * b);
      j.block<2, 2>(2 * b, 2 * b) = -u.dot(f) * Mat<2, 2>::Identity() - u * f.transpose();
    }
    return j;
  }

  AMat embed(const Point&) const { return AMat::Identity(); }
  AMat coords(const Point&) const { return AMat::Identity(); }

  AMat tangent_projector(const Point& x) const {
    auto f = frame(x);
    return f * f.transpose();
  }
  AMat x_map(const Point& x) const { return tangent_projector(x); }
  AMat y_map(const Point& x) const { return tangent_projector(x); }

  Mat<4, 2> frame(const Point& x) const {
    Mat<4, 2> f = Mat<4, 2>::Zero();
    f(0, 0) = -x(1);
    f(1, 0) = x(0);
    f(2, 1) = -x(3);
    f(3, 1) = x(2);
    return f;
  }

  Mat<4, 2> normal_frame(const Point& x) const {
    Mat<4, 2> f = Mat<4, 2>::Zero();
    f.block<2, 1>(0, 0) = x.head<2>();
    f.block<2, 1>(2, 1) = x.tail<2>();
    return f;
  }

  TVec torsion(const Point&, const TVec&, const TVec&) const { return TVec::Zero(); }
  Noise dy(const Point&, const TVec&, const TVec&) const { return Noise::Zero(); }

  ExtMat<4> ricci(const Point&) const { return ExtMat<4>::Zero(4, 4); }
  ExtMat<4> curvature_operator(const Point&) const { return ExtMat<4>::Zero(6, 6); }
  std::optional<double> constant_curvature() const { return 0.0; }
  bool breve_is_flat() const { return false; }

  AMat transport_step(const Point& x, const Point& y, Connection) const {
    AMat r = AMat::Zero();
    for (int b = 0; b < 2; ++b)
      r.block<2, 2>(2 * b, 2 * b) =
          detail::rodrigues<2>(x.segment<2>(2 * b), y.segment<2>(2 * b));
    return r * tangent_projector(x);
  }

  Point chart(const Point& x, const TVec& v) const {
    auto f = frame(x);
    Vec<2> a = f.transpose() * v;
    double a0 = std::atan2(x(1), x(0)) + a(0);
    double b0 = std::atan2(x(3), x(2)) + a(1);
    return from_angles(a0, b0);
  }
};

}  // namespace pathforms
