#pragma once

// SO(3) represented by unit quaternions (w, x, y, z) in R^4, with tangent
// vectors in body coordinates R^3 (v <-> q (0, v) / 2) and the bi-invariant
// metric for which the body basis is orthonormal.  Three stochastic systems:
//
//   left   dq = q (0, dB) / 2 (+ optional left-invariant drift)
//   right  dq = (0, dB) q / 2
//   bi     dq = ((0, dB1) q - q (0, dB2)) / (2 sqrt 2),  B = (B1, B2) in R^6
//
// The factor 1/sqrt 2 makes X X^* the identity so that all three have the
// same generator (half the Laplacian).

#include "pathforms/manifold.hpp"

namespace pathforms {

namespace quat {

inline Vec4 mul(const Vec4& a, const Vec4& b) {
  Vec4 r;
  r(0) = a(0) * b(0) - a.tail<3>().dot(b.tail<3>());
  r.tail<3>() = a(0) * b.tail<3>() + b(0) * a.tail<3>() + a.tail<3>().cross(b.tail<3>());
  return r;
}

inline Vec4 conj(const Vec4& a) { return Vec4(a(0), -a(1), -a(2), -a(3)); }

inline Vec4 pure(const Vec3& v) { return Vec4(0.0, v(0), v(1), v(2)); }

// a (x) b = left(a) b
inline Mat4 left(const Vec4& a) {
  Mat4 m;
  m << a(0), -a(1), -a(2), -a(3),
       a(1), a(0), -a(3), a(2),
       a(2), a(3), a(0), -a(1),
       a(3), -a(2), a(1), a(0);
  return m;
}

// a (x) b = right(b) a
inline Mat4 right(const Vec4& b) {
  Mat4 m;
  m << b(0), -b(1), -b(2), -b(3),
       b(1), b(0), b(3), -b(2),
       b(2), -b(3), b(0), b(1),
       b(3), b(2), -b(1), b(0);
  return m;
}

inline Mat3 rotation(const Vec4& q) {
  double w = q(0), x = q(1), y = q(2), z = q(3);
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

inline Vec4 exp(const Vec3& v) {
  double th = v.norm();
  if (th < 1e-12) return Vec4(1.0, v(0), v(1), v(2)).normalized();
  Vec4 r;
  r(0) = std::cos(th);
  r.tail<3>() = (std::sin(th) / th) * v;
  return r;
}

// Rotation vector of a unit quaternion (shortest representative).
inline Vec3 log(const Vec4& q) {
  Vec4 r = q(0) < 0 ? Vec4(-q) : q;
  double s = r.tail<3>().norm();
  if (s < 1e-12) return 2.0 * r.tail<3>();
  return (2.0 * std::atan2(s, r(0)) / s) * r.tail<3>();
}

}  // namespace quat

enum class SO3Kind { left, right, biinvariant };

template <SO3Kind Kind>
class SO3 {
 public:
  static constexpr int kAmbient = 4;
  static constexpr int kTangent = 3;
  static constexpr int kNoise = Kind == SO3Kind::biinvariant ? 6 : 3;
  static constexpr int kDim = 3;
  using Point = Vec4;
  using TVec = Vec3;
  using Noise = Vec<kNoise>;
  using AMat = Mat4;

  SO3() = default;
  explicit SO3(const Vec3& body_drift) : drift_(body_drift) {
    if (Kind != SO3Kind::left && drift_.norm() > 0)
      throw std::invalid_argument("SO3: drift is only supported for the left-invariant system");
  }

  static Point identity() { return Point(1, 0, 0, 0); }

  const Vec3& drift() const { return drift_; }

  std::string name() const {
    switch (Kind) {
      case SO3Kind::left: return "so3_left";
      case SO3Kind::right: return "so3_right";
      default: return "so3_biinvariant";
    }
  }
  bool is_gradient() const { return false; }

  double constraint_violation(const Point& q) const { return std::abs(q.norm() - 1.0); }
  Point project(const Point& q) const { return q / q.norm(); }
  AMat project_jacobian(const Point& q) const {
    double r = q.norm();
    Point u = q / r;
    return (AMat::Identity() - u * u.transpose()) / r;
  }

  Point velocity(const Point& q, const Noise& e, double dt) const {
    if constexpr (Kind == SO3Kind::left) {
      return 0.5 * quat::mul(q, quat::pure(e + dt * drift_));
    } else if constexpr (Kind == SO3Kind::right) {
      return 0.5 * quat::mul(quat::pure(e), q);
    } else {
      return kBiScale * (quat::mul(quat::pure(e.template head<3>()), q) -
                         quat::mul(q, quat::pure(e.template tail<3>())));
    }
  }

  AMat velocity_jacobian(const Point&, const Noise& e, double dt) const {
    if constexpr (Kind == SO3Kind::left) {
      return 0.5 * quat::right(quat::pure(e + dt * drift_));
    } else if constexpr (Kind == SO3Kind::right) {
      return 0.5 * quat::left(quat::pure(e));
    } else {
      return kBiScale * (quat::left(quat::pure(e.template head<3>())) -
                         quat::right(quat::pure(e.template tail<3>())));
    }
  }

  // body v -> q (0, v) / 2
  Mat<4, 3> embed(const Point& q) const { return 0.5 * quat::left(q).rightCols<3>(); }
  // ambient variation d -> 2 Im(conj(q) d)
  Mat<3, 4> coords(const Point& q) const { return 2.0 * quat::left(quat::conj(q)).bottomRows<3>(); }

  Mat3 tangent_projector(const Point&) const { return Mat3::Identity(); }
  Mat3 frame(const Point&) const { return Mat3::Identity(); }
  Mat<3, 0> normal_frame(const Point&) const { return Mat<3, 0>(); }

  Mat<3, kNoise> x_map(const Point& q) const {
    if constexpr (Kind == SO3Kind::left) {
      return Mat3::Identity();
    } else if constexpr (Kind == SO3Kind::right) {
      return quat::rotation(q).transpose();
    } else {
      Mat<3, 6> x;
      x << quat::rotation(q).transpose(), -Mat3::Identity();
      return x / std::sqrt(2.0);
    }
  }

  Mat<kNoise, 3> y_map(const Point& q) const { return x_map(q).transpose(); }

  TVec torsion(const Point&, const TVec& u, const TVec& v) const {
    if constexpr (Kind == SO3Kind::left) return -u.cross(v);
    else if constexpr (Kind == SO3Kind::right) return u.cross(v);
    else return TVec::Zero();
  }

  Noise dy(const Point& q, const TVec& u, const TVec& v) const {
    if constexpr (Kind == SO3Kind::left) {
      return -u.cross(v);
    } else if constexpr (Kind == SO3Kind::right) {
      return quat::rotation(q) * u.cross(v);
    } else {
      Noise r;
      r << quat::rotation(q) * u.cross(v), u.cross(v);
      return r / std::sqrt(2.0);
    }
  }

  ExtMat<3> ricci(const Point&) const { return 0.5 * Mat3::Identity(); }
  ExtMat<3> curvature_operator(const Point&) const { return 0.25 * Mat3::Identity(); }
  std::optional<double> constant_curvature() const { return 0.25; }
  bool breve_is_flat() const { return Kind != SO3Kind::biinvariant; }

  // Parallel transport over one step, body coordinates: Ad(exp(c delta)) with
  // delta = log(q^-1 q'); c = 0 keeps left-invariant fields, c = -1 keeps
  // right-invariant fields, c = -1/2 is Levi-Civita.
  Mat3 transport_step(const Point& q, const Point& q2, Connection conn) const {
    Vec4 r = quat::mul(quat::conj(q), q2);
    if (r(0) < 0) r = -r;
    switch (coefficient(conn)) {
      case 0: return Mat3::Identity();
      case 2: return quat::rotation(r).transpose();
      default: {
        Vec4 half = Vec4(r(0) + 1.0, r(1), r(2), r(3)).normalized();
        return quat::rotation(half).transpose();
      }
    }
  }

  Point chart(const Point& q, const TVec& v) const { return quat::mul(q, quat::exp(0.5 * v)); }

 private:
  static constexpr double kBiScale = 0.35355339059327373;  // 1 / (2 sqrt 2)

  // 0: left-invariant parallel, 1: Levi-Civita, 2: right-invariant parallel.
  static int coefficient(Connection c) {
    if (c == Connection::levi_civita || Kind == SO3Kind::biinvariant) return 1;
    bool lw = c == Connection::lejan_watanabe;
    if (Kind == SO3Kind::left) return lw ? 0 : 2;
    return lw ? 2 : 0;
  }

  Vec3 drift_ = Vec3::Zero();
};

using SO3Left = SO3<SO3Kind::left>;
using SO3Right = SO3<SO3Kind::right>;
using SO3Bi = SO3<SO3Kind::biinvariant>;

}  // namespace pathforms
