#pragma once

// Common interface of the catalogue geometries.
//
// Points live in an ambient R^a.  Tangent vectors are written in "tangent
// coordinates" R^d: the ambient coordinates for embedded manifolds, body
// (left-trivialised) coordinates for SO(3).  Maps between tangent spaces are
// d x d matrices that vanish on non-tangent inputs.

#include "pathforms/exterior.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <concepts>
#include <optional>
#include <string>

namespace pathforms {

enum class Connection { levi_civita, lejan_watanabe, adjoint };

inline std::string to_string(Connection c) {
  switch (c) {
    case Connection::levi_civita: return "levi_civita";
    case Connection::lejan_watanabe: return "lejan_watanabe";
    case Connection::adjoint: return "adjoint";
  }
  return "?";
}

template <class M>
concept Geometry = requires(const M& g, const typename M::Point& x, const typename M::TVec& u,
                            const typename M::Noise& e, double dt, Connection c) {
  { M::kAmbient } -> std::convertible_to<int>;
  { M::kTangent } -> std::convertible_to<int>;
  { M::kNoise } -> std::convertible_to<int>;
  { M::kDim } -> std::convertible_to<int>;
  { g.name() } -> std::convertible_to<std::string>;
  { g.is_gradient() } -> std::convertible_to<bool>;
  { g.project(x) } -> std::convertible_to<typename M::Point>;
  g.project_jacobian(x);
  g.velocity(x, e, dt);
  g.velocity_jacobian(x, e, dt);
  g.embed(x);
  g.coords(x);
  g.x_map(x);
  g.y_map(x);
  g.tangent_projector(x);
  g.frame(x);
  g.normal_frame(x);
  { g.torsion(x, u, u) } -> std::convertible_to<typename M::TVec>;
  { g.dy(x, u, u) } -> std::convertible_to<typename M::Noise>;
  g.ricci(x);
  g.curvature_operator(x);
  { g.constant_curvature() } -> std::convertible_to<std::optional<double>>;
  { g.breve_is_flat() } -> std::convertible_to<bool>;
  g.transport_step(x, x, c);
  { g.chart(x, u) } -> std::convertible_to<typename M::Point>;
  { g.constraint_violation(x) } -> std::convertible_to<double>;
};

template <Geometry M>
using TMat = Mat<M::kTangent, M::kTangent>;

template <Geometry M>
using TExt = ExtVec<M::kTangent>;

template <Geometry M>
using TExtMat = ExtMat<M::kTangent>;

template <Geometry M>
using QVec = MultiVector<M::kTangent>;

inline constexpr double kTangentTol = 1e-10;

template <Geometry M>
void require_on_manifold(const M& g, const typename M::Point& x, const char* what) {
  double v = g.constraint_violation(x);
  if (!(v <= 1e-9))
    throw std::invalid_argument(std::string(what) + ": point is off the manifold (violation " +
                                std::to_string(v) + ")");
}

template <Geometry M>
void require_tangent(const M& g, const typename M::Point& x, const typename M::TVec& v,
                     const char* what) {
  typename M::TVec r = v - g.tangent_projector(x) * v;
  if (!(r.norm() <= kTangentTol * std::max(1.0, v.norm())))
    throw std::invalid_argument(std::string(what) + ": vector is not tangent at the base point");
}

/// Y(x) with tangency enforced on the input.
template <Geometry M>
typename M::Noise apply_y(const M& g, const typename M::Point& x, const typename M::TVec& v) {
  require_tangent(g, x, v, "y_map");
  return g.y_map(x) * v;
}

/// Ambient tangent vector for the velocity field X(x)e.
template <Geometry M>
typename M::TVec apply_x(const M& g, const typename M::Point& x, const typename M::Noise& e) {
  return g.x_map(x) * e;
}

/// q-th compound of the orthonormal tangent frame: columns span the tangent q-vectors.
template <Geometry M>
TExtMat<M> ext_frame(const M& g, const typename M::Point& x, int q) {
  return compound<M::kTangent, M::kDim>(g.frame(x), q);
}

template <Geometry M>
TExtMat<M> ext_projector(const M& g, const typename M::Point& x, int q) {
  auto e = ext_frame(g, x, q);
  return e * e.transpose();
}

/// Inverse of A : T_x -> T_y as a map T_y -> T_x (zero on non-tangent inputs).
template <Geometry M>
TMat<M> tangent_inverse(const M& g, const typename M::Point& x, const typename M::Point& y,
                        const TMat<M>& a) {
  auto ex = g.frame(x);
  auto ey = g.frame(y);
  Mat<M::kDim, M::kDim> core = ey.transpose() * a * ex;
  return ex * core.inverse() * ey.transpose();
}

/// Inverse of A : wedge^q T_x -> wedge^q T_y.
template <Geometry M>
TExtMat<M> ext_tangent_inverse(const M& g, const typename M::Point& x,
                               const typename M::Point& y, const TExtMat<M>& a, int q) {
  auto ex = ext_frame(g, x, q);
  auto ey = ext_frame(g, y, q);
  Eigen::MatrixXd core = ey.transpose() * a * ex;
  return ex * core.inverse() * ey.transpose();
}

/// Weitzenboeck curvature on q-vectors: Ric as a derivation minus twice the
/// curvature operator applied to every pair of slots.
template <Geometry M>
TExtMat<M> weitzenbock(const M& g, const typename M::Point& x, int q) {
  constexpr int d = M::kTangent;
  if (q < 0 || q > M::kDim)
    throw std::invalid_argument("weitzenbock: degree " + std::to_string(q) + " exceeds dimension " +
                                std::to_string(M::kDim));
  if (q == 0) return TExtMat<M>::Zero(1, 1);
  TExtMat<M> ric = g.ricci(x);
  TExtMat<M> out = extend_operator<d>(ric, 1, q);
  if (q >= 2) out -= 2.0 * extend_operator<d>(TExtMat<M>(g.curvature_operator(x)), 2, q);
  TExtMat<M> p = ext_projector(g, x, q);
  return p * out * p;
}

/// Weitzenboeck curvature of the connection carried by the damped transport
/// of the flow (zero for the flat invariant connections on SO(3)).
template <Geometry M>
TExtMat<M> breve_weitzenbock(const M& g, const typename M::Point& x, int q) {
  if (g.breve_is_flat()) {
    int sz = binomial(M::kTangent, q);
    return TExtMat<M>::Zero(sz, sz);
  }
  return weitzenbock(g, x, q);
}

/// exp(-dt/2 * R^q(x)) restricted to tangent q-vectors.
template <Geometry M>
TExtMat<M> curvature_damping(const M& g, const typename M::Point& x, double dt, int q,
                             bool breve) {
  if (q == 0) return TExtMat<M>::Identity(1, 1);
  if (breve && g.breve_is_flat()) return ext_projector(g, x, q);
  if (auto k = g.constant_curvature()) {
    double c = q * (M::kDim - q) * (*k);
    return std::exp(-0.5 * dt * c) * ext_projector(g, x, q);
  }
  Eigen::MatrixXd w = weitzenbock(g, x, q);
  Eigen::MatrixXd e = (-0.5 * dt * w).exp();
  TExtMat<M> p = ext_projector(g, x, q);
  return p * TExtMat<M>(e) * p;
}

}  // namespace pathforms
