#pragma once

// Path simulation and the per-path transports built on it.
//
// The integrator is the Stratonovich Heun predictor-corrector followed by
// projection onto the manifold.  The derivative flow is the exact
// linearisation of that discrete map, so it is consistent with finite
// differences of re-simulated paths to rounding.

#include "pathforms/manifold.hpp"
#include "pathforms/rng.hpp"

#include <vector>

namespace pathforms {

struct StepRejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform time grid t_k = k h, k = 0..steps.
struct Grid {
  double horizon = 0;
  double h = 0;
  int steps = 0;

  Grid() = default;
  Grid(double horizon_, double h_) : horizon(horizon_), h(h_) {
    require(h_ > 0 && std::isfinite(h_), "grid: step size must be positive");
    require(horizon_ > 0 && std::isfinite(horizon_), "grid: horizon must be positive");
    double k = horizon_ / h_;
    steps = static_cast<int>(std::llround(k));
    require(steps >= 1 && std::abs(k - steps) <= 1e-9 * std::max(1.0, k),
            "grid: horizon " + std::to_string(horizon_) + " is not an integer multiple of step " +
                std::to_string(h_));
  }

  double time(int k) const { return k * h; }

  int index_of(double t) const {
    double k = t / h;
    int i = static_cast<int>(std::llround(k));
    require(i >= 0 && i <= steps && std::abs(k - i) <= 1e-9 * std::max(1.0, k),
            "grid: time " + std::to_string(t) + " is not a grid point");
    return i;
  }
};

template <Geometry M>
struct PathSample {
  Grid grid;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::vector<typename M::Noise> increments;  // size steps
  std::vector<typename M::Point> points;      // size steps + 1
};

template <Geometry M>
typename M::Point heun_step(const M& g, const typename M::Point& x, const typename M::Noise& db,
                            double h) {
  auto v1 = g.velocity(x, db, h);
  typename M::Point xt = x + v1;
  auto v2 = g.velocity(xt, db, h);
  typename M::Point y = g.project(x + 0.5 * (v1 + v2));
  double jump = (y - x).norm();
  if (!(jump <= 10.0 * (db.norm() + h)))
    throw StepRejected("heun_step: projection moved the point by " + std::to_string(jump));
  return y;
}

/// One step together with its Jacobian in tangent coordinates.
template <Geometry M>
typename M::Point heun_step_linearized(const M& g, const typename M::Point& x,
                                       const typename M::Noise& db, double h, TMat<M>& jac) {
  using AMat = Mat<M::kAmbient, M::kAmbient>;
  auto v1 = g.velocity(x, db, h);
  typename M::Point xt = x + v1;
  auto v2 = g.velocity(xt, db, h);
  typename M::Point xp = x + 0.5 * (v1 + v2);
  AMat j1 = g.velocity_jacobian(x, db, h);
  AMat j2 = g.velocity_jacobian(xt, db, h);
  AMat dxp = AMat::Identity() + 0.5 * (j1 + j2 * (AMat::Identity() + j1));
  typename M::Point y = g.project(xp);
  double jump = (y - x).norm();
  if (!(jump <= 10.0 * (db.norm() + h)))
    throw StepRejected("heun_step: projection moved the point by " + std::to_string(jump));
  jac = g.coords(y) * g.project_jacobian(xp) * dxp * g.embed(x);
  return y;
}

template <Geometry M>
PathSample<M> simulate_increments(const M& g, const typename M::Point& x0, const Grid& grid,
                                  std::vector<typename M::Noise> increments) {
  require_on_manifold(g, x0, "simulate");
  require(static_cast<int>(increments.size()) == grid.steps,
          "simulate: increment count does not match the grid");
  PathSample<M> p;
  p.grid = grid;
  p.increments = std::move(increments);
  p.points.reserve(grid.steps + 1);
  p.points.push_back(x0);
  for (int k = 0; k < grid.steps; ++k)
    p.points.push_back(heun_step(g, p.points.back(), p.increments[k], grid.h));
  return p;
}

template <Geometry M>
PathSample<M> simulate(const M& g, const typename M::Point& x0, const Grid& grid,
                       std::uint64_t seed, std::uint64_t path_index) {
  NoiseDriver<M::kNoise> drv(seed, path_index, grid.h, grid.steps);
  std::vector<typename M::Noise> inc(grid.steps);
  for (int k = 0; k < grid.steps; ++k) inc[k] = drv.increment(k);
  auto p = simulate_increments(g, x0, grid, std::move(inc));
  p.seed = seed;
  p.path_index = path_index;
  return p;
}

/// T xi_k : T_{x0} -> T_{x_k}, k = 0..steps (k = 0 is the tangent projector).
template <Geometry M>
std::vector<TMat<M>> derivative_flow(const M& g, const PathSample<M>& p,
                                     std::vector<TMat<M>>* step_jacobians = nullptr) {
  std::vector<TMat<M>> out;
  out.reserve(p.points.size());
  out.push_back(g.tangent_projector(p.points[0]));
  if (step_jacobians) step_jacobians->clear();
  TMat<M> j;
  for (int k = 0; k < p.grid.steps; ++k) {
    auto y = heun_step_linearized(g, p.points[k], p.increments[k], p.grid.h, j);
    if ((y - p.points[k + 1]).norm() > 1e-12)
      throw std::logic_error("derivative_flow: path does not match its increments");
    out.push_back(j * out.back());
    if (step_jacobians) step_jacobians->push_back(j);
  }
  return out;
}

/// Cumulative parallel transport //_k : T_{x0} -> T_{x_k}.
template <Geometry M>
std::vector<TMat<M>> parallel_transport(const M& g, const PathSample<M>& p, Connection c) {
  std::vector<TMat<M>> out;
  out.reserve(p.points.size());
  out.push_back(g.tangent_projector(p.points[0]));
  for (int k = 0; k < p.grid.steps; ++k)
    out.push_back(g.transport_step(p.points[k], p.points[k + 1], c) * out.back());
  return out;
}

enum class DampedMode { levi_civita, breve };

inline Connection damped_connection(DampedMode m) {
  return m == DampedMode::levi_civita ? Connection::levi_civita : Connection::adjoint;
}

/// One step of damped transport on q-vectors: wedge^q(//) exp(-h R^q(x) / 2).
template <Geometry M>
TExtMat<M> damped_step(const M& g, const typename M::Point& x, const typename M::Point& y,
                       double h, int q, DampedMode mode) {
  TMat<M> par = g.transport_step(x, y, damped_connection(mode));
  TExtMat<M> wp = compound<M::kTangent, M::kTangent>(par, q);
  bool breve = mode == DampedMode::breve;
  if (q == 0 || (breve && g.breve_is_flat())) return wp;
  if (auto k = g.constant_curvature()) return std::exp(-0.5 * h * q * (M::kDim - q) * (*k)) * wp;
  return wp * curvature_damping(g, x, h, q, breve);
}

/// Scalar damping factor per step when the curvature term is a multiple of the identity.
template <Geometry M>
std::optional<double> damped_scalar(const M& g, double h, int q, DampedMode mode) {
  if (q == 0 || (mode == DampedMode::breve && g.breve_is_flat())) return 1.0;
  if (auto k = g.constant_curvature()) return std::exp(-0.5 * h * q * (M::kDim - q) * (*k));
  return std::nullopt;
}

/// W^(q)_k : wedge^q T_{x0} -> wedge^q T_{x_k}.
template <Geometry M>
std::vector<TExtMat<M>> damped_transport(const M& g, const PathSample<M>& p, int q,
                                         DampedMode mode) {
  require(q >= 0 && q <= M::kDim, "damped_transport: degree " + std::to_string(q) +
                                      " exceeds dimension " + std::to_string(M::kDim));
  std::vector<TExtMat<M>> out;
  out.reserve(p.points.size());
  out.push_back(ext_projector(g, p.points[0], q));
  for (int k = 0; k < p.grid.steps; ++k)
    out.push_back(damped_step(g, p.points[k], p.points[k + 1], p.grid.h, q, mode) * out.back());
  return out;
}

/// Increments of the anti-development: (//_k)^-1 X(x_k) dB_k in T_{x0}.
template <Geometry M>
std::vector<typename M::TVec> anti_development(const M& g, const PathSample<M>& p) {
  auto par = parallel_transport(g, p, Connection::lejan_watanabe);
  std::vector<typename M::TVec> out;
  out.reserve(p.grid.steps);
  for (int k = 0; k < p.grid.steps; ++k) {
    TMat<M> inv = tangent_inverse(g, p.points[0], p.points[k], par[k]);
    out.push_back(inv * (g.x_map(p.points[k]) * p.increments[k]));
  }
  return out;
}

/// Left-point sum of <a_k, d_k>.
template <class V>
double ito_integral(const std::vector<V>& a, const std::vector<V>& d) {
  require(a.size() == d.size(), "ito_integral: length mismatch");
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].dot(d[k]);
  return s;
}

/// Martingale increments X(x_k) dB_k in tangent coordinates.
template <Geometry M>
std::vector<typename M::TVec> martingale_increments(const M& g, const PathSample<M>& p) {
  std::vector<typename M::TVec> out(p.grid.steps);
  for (int k = 0; k < p.grid.steps; ++k) out[k] = g.x_map(p.points[k]) * p.increments[k];
  return out;
}

/// Everything a path-space computation may need, built once per path.
template <Geometry M>
struct TransportStack {
  std::vector<TMat<M>> txi;       // derivative flow
  std::vector<TMat<M>> jac;       // per-step Jacobians
  std::vector<TMat<M>> levi;      // Levi-Civita transport
  std::vector<TExtMat<M>> damped[M::kDim + 2];  // Levi-Civita damped, by degree
  std::vector<TExtMat<M>> breve[M::kDim + 2];   // adjoint damped, by degree
};

struct StackRequest {
  bool derivative = false;
  bool levi = false;
  int damped_max = -1;
  int breve_max = -1;
};

template <Geometry M>
TransportStack<M> build_stack(const M& g, const PathSample<M>& p, const StackRequest& r) {
  TransportStack<M> s;
  if (r.derivative) s.txi = derivative_flow(g, p, &s.jac);
  if (r.levi) s.levi = parallel_transport(g, p, Connection::levi_civita);
  for (int q = 0; q <= std::min(r.damped_max, M::kDim); ++q)
    s.damped[q] = damped_transport(g, p, q, DampedMode::levi_civita);
  for (int q = 0; q <= std::min(r.breve_max, M::kDim); ++q)
    s.breve[q] = damped_transport(g, p, q, DampedMode::breve);
  return s;
}

}  // namespace pathforms
