#pragma once

// Two-vector fields along a path built from the Levi-Civita damped transports
// W (on vectors) and W2 (on 2-vectors).
//
// A 2-tensor in T_{x_s} (x) T_{x_t} is a d x d matrix in tangent coordinates,
// first slot = rows.  2-vectors at a single point are antisymmetric matrices
// (to_matrix / from_matrix).  Every field used here has the factored shape
//
//   F_{s,t} = (lead[s] * weight[t] + tail[s]) * push[t]^T,   s <= t,
//
// with lead, tail in T_{x_s} (x) T_{x0} and push[t] = W_t, and is extended
// to s > t by F_{s,t} = -F_{t,s}^T.

#include "pathforms/flow.hpp"
#include "pathforms/schedule.hpp"

#include <vector>

namespace pathforms {

template <Geometry M>
struct TwoVectorField {
  using Matrix = TMat<M>;
  std::vector<Matrix> lead, tail, push;
  std::vector<double> weight;

  int steps() const { return static_cast<int>(push.size()) - 1; }

  Matrix value(int s, int t) const {
    if (s > t) return -value(t, s).transpose();
    return (lead[s] * weight[t] + tail[s]) * push[t].transpose();
  }

  Matrix diagonal(int s) const { return value(s, s); }
};

/// W, W^-1, W2, W2^-1 along a path (Levi-Civita damped transport).
template <Geometry M>
struct DampedFrames {
  std::vector<TMat<M>> w, winv;
  std::vector<TExtMat<M>> w2, w2inv;
};

template <Geometry M>
DampedFrames<M> damped_frames(const M& g, const PathSample<M>& p, const TransportStack<M>& st) {
  require(st.damped[1].size() == p.points.size() && st.damped[2].size() == p.points.size(),
          "damped_frames: stack needs damped transport of degree 1 and 2");
  DampedFrames<M> f;
  f.w2 = st.damped[2];
  const auto& x0 = p.points[0];
  for (std::size_t k = 0; k < p.points.size(); ++k) {
    f.w.push_back(TMat<M>(st.damped[1][k]));
    f.winv.push_back(tangent_inverse(g, x0, p.points[k], f.w[k]));
    f.w2inv.push_back(ext_tangent_inverse(g, x0, p.points[k], f.w2[k], 2));
  }
  return f;
}

inline StackRequest hspace_request() {
  StackRequest r;
  r.levi = true;
  r.damped_max = 2;
  return r;
}

/// Damped covariant derivative D/dt v + Ric(v)/2 by a forward difference,
/// k = 0..steps-1.
template <Geometry M>
std::vector<typename M::TVec> damped_derivative(const M& g, const PathSample<M>& p,
                                                const std::vector<typename M::TVec>& v) {
  require(v.size() == p.points.size(), "damped_derivative: field length does not match path");
  const double h = p.grid.h;
  std::vector<typename M::TVec> out(p.grid.steps);
  for (int k = 0; k < p.grid.steps; ++k) {
    const auto& x = p.points[k];
    const auto& y = p.points[k + 1];
    TMat<M> par = g.transport_step(x, y, Connection::levi_civita);
    TMat<M> back = tangent_inverse(g, x, y, par);
    TMat<M> ric = g.ricci(x);
    out[k] = (back * v[k + 1] - v[k]) / h + 0.5 * ric * v[k];
  }
  return out;
}

template <Geometry M>
double h1_energy(const M& g, const PathSample<M>& p, const std::vector<typename M::TVec>& v) {
  double e = 0;
  for (const auto& d : damped_derivative(g, p, v)) e += d.squaredNorm();
  return e * p.grid.h;
}

/// k(r) = wedge^2(W_r^-1) W2_r V in wedge^2 T_{x0}.
template <Geometry M>
std::vector<QVec<M>> k_process(const DampedFrames<M>& f, const QVec<M>& v) {
  require(v.degree() == 2, "k_process: expects a 2-vector");
  std::vector<QVec<M>> out;
  out.reserve(f.w.size());
  for (std::size_t r = 0; r < f.w.size(); ++r) {
    TExtMat<M> pull = compound<M::kTangent, M::kTangent>(f.winv[r], 2);
    out.emplace_back(2, TExt<M>(pull * (f.w2[r] * v.coeffs())));
  }
  return out;
}

/// wedge^2(W_r^-1) R(W2_r V): the derivative of k.
template <Geometry M>
std::vector<QVec<M>> k_derivative(const M& g, const PathSample<M>& p, const DampedFrames<M>& f,
                                  const QVec<M>& v) {
  std::vector<QVec<M>> out;
  out.reserve(f.w.size());
  for (std::size_t r = 0; r < f.w.size(); ++r) {
    TExtMat<M> pull = compound<M::kTangent, M::kTangent>(f.winv[r], 2);
    TExtMat<M> curv = g.curvature_operator(p.points[r]);
    out.emplace_back(2, TExt<M>(pull * (curv * (f.w2[r] * v.coeffs()))));
  }
  return out;
}

namespace detail {

inline std::vector<double> checked_weights(const ScalarSchedule& lambda, const Grid& grid) {
  auto w = lambda.sample(grid.h, grid.steps);
  require(std::abs(w[0]) <= 1e-14, "two-vector field: the weight must vanish at time 0");
  return w;
}

}  // namespace detail

/// Z_{s,t} = lambda(s) lambda(t) (1 (x) W_t W_s^-1) W2_s V.
template <Geometry M>
TwoVectorField<M> z_field(const PathSample<M>& p, const DampedFrames<M>& f,
                          const ScalarSchedule& lambda, const QVec<M>& v) {
  require(v.degree() == 2, "z_field: expects a 2-vector");
  auto w = detail::checked_weights(lambda, p.grid);
  TwoVectorField<M> z;
  z.push = f.w;
  z.weight = w;
  const int n = p.grid.steps;
  for (int s = 0; s <= n; ++s) {
    TMat<M> ms = to_matrix(MultiVector<M::kTangent>(2, TExt<M>(f.w2[s] * v.coeffs())));
    z.lead.push_back(w[s] * ms * f.winv[s].transpose());
    z.tail.push_back(TMat<M>::Zero());
  }
  return z;
}

/// U = Z - (W_s (x) W_t) int_0^s lambda^2 k'(r) dr, left-point quadrature.
template <Geometry M>
TwoVectorField<M> u_field(const M& g, const PathSample<M>& p, const DampedFrames<M>& f,
                          const ScalarSchedule& lambda, const QVec<M>& v) {
  TwoVectorField<M> u = z_field(p, f, lambda, v);
  auto kd = k_derivative(g, p, f, v);
  const double h = p.grid.h;
  TMat<M> acc = TMat<M>::Zero();
  for (int s = 0; s <= p.grid.steps; ++s) {
    u.tail[s] = -f.w[s] * acc;
    acc += h * u.weight[s] * u.weight[s] * to_matrix(kd[s]);
  }
  return u;
}

/// Q(U)_{s,t} = (1 (x) W_t W_s^-1) W2_s int_0^s W2_r^-1 R(U_{r,r}) dr.
template <Geometry M>
TwoVectorField<M> q_operator(const M& g, const PathSample<M>& p, const DampedFrames<M>& f,
                             const TwoVectorField<M>& u) {
  require(u.steps() == p.grid.steps, "q_operator: field and path have different grids");
  TwoVectorField<M> q;
  q.push = f.w;
  q.weight.assign(p.points.size(), 0.0);
  const double h = p.grid.h;
  TExt<M> acc = TExt<M>::Zero(binomial(M::kTangent, 2));
  for (int s = 0; s <= p.grid.steps; ++s) {
    TMat<M> at_s = to_matrix(MultiVector<M::kTangent>(2, TExt<M>(f.w2[s] * acc)));
    q.lead.push_back(TMat<M>::Zero());
    q.tail.push_back(at_s * f.winv[s].transpose());
    TExtMat<M> curv = g.curvature_operator(p.points[s]);
    acc += h * (f.w2inv[s] * (curv * from_matrix(u.diagonal(s)).coeffs()));
  }
  return q;
}

/// Pull-back (W_s^-1 (x) W_t^-1) F_{s,t} to T_{x0} (x) T_{x0}.
template <Geometry M>
TMat<M> pulled_back(const DampedFrames<M>& f, const TwoVectorField<M>& field, int s, int t) {
  return f.winv[s] * field.value(s, t) * f.winv[t].transpose();
}

struct IdentityResidual {
  double sup = 0;  // max over s <= t of |U + Q(U) - Z|
  int s = 0, t = 0;
};

template <Geometry M>
IdentityResidual identity_check(const M& g, const PathSample<M>& p, const DampedFrames<M>& f,
                                const ScalarSchedule& lambda, const QVec<M>& v) {
  auto z = z_field(p, f, lambda, v);
  auto u = u_field(g, p, f, lambda, v);
  auto q = q_operator(g, p, f, u);
  IdentityResidual r;
  const int n = p.grid.steps;
  for (int s = 0; s <= n; ++s)
    for (int t = s; t <= n; ++t) {
      double e = (u.value(s, t) + q.value(s, t) - z.value(s, t)).norm();
      if (e > r.sup) r = {e, s, t};
    }
  return r;
}

/// Sum over grid cells of |mixed second difference|^2 / h^2 of the pulled-back
/// field: the discrete double-derivative energy.
template <Geometry M>
double mixed_energy(const DampedFrames<M>& f, const TwoVectorField<M>& field, double h) {
  const int n = field.steps();
  std::vector<TMat<M>> prev(n + 1), cur(n + 1);
  for (int t = 0; t <= n; ++t) prev[t] = pulled_back(f, field, 0, t);
  double e = 0;
  for (int s = 1; s <= n; ++s) {
    for (int t = 0; t <= n; ++t) cur[t] = pulled_back(f, field, s, t);
    for (int t = 1; t <= n; ++t)
      e += (cur[t] - cur[t - 1] - prev[t] + prev[t - 1]).squaredNorm();
    std::swap(prev, cur);
  }
  return e / (h * h);
}

/// Forward differences of lambda on the grid, so that their left sums
/// reproduce lambda(t_k) exactly.
inline std::vector<double> weight_increments(const ScalarSchedule& lambda, const Grid& grid) {
  auto w = lambda.sample(grid.h, grid.steps);
  std::vector<double> out(grid.steps + 1);
  for (int k = 0; k < grid.steps; ++k) out[k] = (w[k + 1] - w[k]) / grid.h;
  out[grid.steps] = grid.steps > 0 ? out[grid.steps - 1] : 0.0;
  return out;
}

/// (div Z)_t = J0_t + J1_t along the path, t = t_0..t_n:
///   J0_t = lambda(t) M_t W_t^-T sum_{r >= t} lambda'(r) W_r^T dx_r
///   J1_t = -lambda(t) W_t sum_{r < t} lambda'(r) W_r^-1 M_r^T dx_r
/// with M_r = W2_r V and dx_r = X(x_r) dB_r.
template <Geometry M>
std::vector<typename M::TVec> z_divergence(const M& g, const PathSample<M>& p,
                                           const DampedFrames<M>& f, const ScalarSchedule& lambda,
                                           const QVec<M>& v) {
  require(v.degree() == 2, "z_divergence: expects a 2-vector");
  using TVec = typename M::TVec;
  auto w = detail::checked_weights(lambda, p.grid);
  auto dw = weight_increments(lambda, p.grid);
  const int n = p.grid.steps;
  auto dx = martingale_increments(g, p);
  std::vector<TMat<M>> ms(n + 1);
  for (int r = 0; r <= n; ++r)
    ms[r] = to_matrix(MultiVector<M::kTangent>(2, TExt<M>(f.w2[r] * v.coeffs())));

  std::vector<TVec> ahead(n + 1);
  ahead[n] = TVec::Zero();
  for (int r = n - 1; r >= 0; --r) ahead[r] = ahead[r + 1] + dw[r] * (f.w[r].transpose() * dx[r]);

  std::vector<TVec> out(n + 1);
  TVec behind = TVec::Zero();
  for (int t = 0; t <= n; ++t) {
    TVec j0 = w[t] * (ms[t] * (f.winv[t].transpose() * ahead[t]));
    TVec j1 = -w[t] * (f.w[t] * behind);
    out[t] = j0 + j1;
    if (t < n) behind += dw[t] * (f.winv[t] * (ms[t].transpose() * dx[t]));
  }
  return out;
}

}  // namespace pathforms
