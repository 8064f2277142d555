#pragma once

// Monte Carlo estimators of P_t phi and of d(P_t phi).
//
// Each estimator is a per-path kernel: a function of the simulated path and
// its transport stack.  Several kernels can share one set of paths, which is
// how paired (common noise) comparisons are made.  Stochastic integrals are
// left-point sums against the martingale increments X(x_k) dB_k.

#include "pathforms/flow.hpp"
#include "pathforms/forms.hpp"
#include "pathforms/montecarlo.hpp"
#include "pathforms/schedule.hpp"
#include "pathforms/so3.hpp"
#include "pathforms/wiener.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pathforms {

template <Geometry M>
struct PathKernel {
  std::string formula;
  int q = 0;
  bool needs_time = false;  // not defined at t = 0
  StackRequest need;
  std::function<double(const M&, const PathSample<M>&, const TransportStack<M>&)> eval;
};

/// Discretised rho: left-point values and their sum times h.
struct Weights {
  std::vector<double> rho;
  double total = 0;
};

inline Weights make_weights(const ScalarSchedule& s, const Grid& grid) {
  Weights w;
  w.rho.resize(grid.steps);
  double mass = 0;
  for (int k = 0; k < grid.steps; ++k) {
    w.rho[k] = s.value(grid.time(k));
    w.total += w.rho[k] * grid.h;
    mass += std::abs(w.rho[k]) * grid.h;
  }
  if (!(std::abs(w.total) > 1e-12 * std::max(mass, 1e-300)) || !std::isfinite(w.total))
    throw std::invalid_argument("rho schedule integrates to zero over [0, " +
                                std::to_string(grid.horizon) + "]");
  return w;
}

inline Grid mc_grid(const McParams& mc) {
  require(mc.t >= 0 && std::isfinite(mc.t), "estimator: time must be non-negative");
  if (mc.t == 0) {
    Grid g;
    g.h = mc.h;
    return g;
  }
  return Grid(mc.t, mc.h);
}

/// Runs the kernels on the same paths.  One report per kernel, samples by
/// path index.
template <Geometry M>
std::vector<EstimatorReport> run_kernels(const M& g, const typename M::Point& x0,
                                         const std::vector<PathKernel<M>>& kernels,
                                         const McParams& mc) {
  require(!kernels.empty(), "run_kernels: nothing to estimate");
  require(mc.paths >= 2, "run_kernels: need at least two paths");
  require_on_manifold(g, x0, "estimator");
  Grid grid = mc_grid(mc);
  StackRequest need;
  for (const auto& k : kernels) {
    if (k.needs_time && grid.steps == 0)
      throw std::invalid_argument(k.formula + ": not defined at t = 0");
    need.derivative = need.derivative || k.need.derivative;
    need.levi = need.levi || k.need.levi;
    need.damped_max = std::max(need.damped_max, k.need.damped_max);
    need.breve_max = std::max(need.breve_max, k.need.breve_max);
  }
  std::vector<EstimatorReport> out(kernels.size());
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    auto& r = out[j];
    r.formula = kernels[j].formula;
    r.manifold = g.name();
    r.q = kernels[j].q;
    r.t = mc.t;
    r.h = mc.h;
    r.seed = mc.seed;
    r.digest = mc.digest;
    r.samples.assign(mc.paths, 0.0);
  }
  parallel_for(mc.paths, mc.threads, [&](std::size_t i, int) {
    PathSample<M> p;
    if (grid.steps > 0) {
      p = simulate(g, x0, grid, mc.seed, i);
    } else {
      p.grid = grid;
      p.seed = mc.seed;
      p.path_index = i;
      p.points.push_back(x0);
    }
    auto st = build_stack(g, p, need);
    for (std::size_t j = 0; j < kernels.size(); ++j) out[j].samples[i] = kernels[j].eval(g, p, st);
  });
  for (auto& r : out) summarize(r);
  return out;
}

namespace detail {

template <Geometry M>
void require_degree(const Form<M>& phi, int q, const std::string& who) {
  if (phi.degree != q)
    throw std::invalid_argument(who + ": form " + phi.name + " has degree " +
                                std::to_string(phi.degree) + " but the argument needs degree " +
                                std::to_string(q));
}

template <Geometry M>
QVec<M> apply(const TExtMat<M>& a, const QVec<M>& v) {
  return QVec<M>(v.degree(), a * v.coeffs());
}

template <Geometry M>
bool torsion_free(const M& g, const typename M::Point& x) {
  constexpr int d = M::kTangent;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (g.torsion(x, M::TVec::Unit(i), M::TVec::Unit(j)).squaredNorm() != 0) return false;
  return true;
}

/// Contraction with the torsion at x; zero below degree two.
template <Geometry M>
QVec<M> torsion_interior(const M& g, const typename M::Point& x, const QVec<M>& v) {
  if (v.degree() < 2) return QVec<M>(std::max(v.degree() - 1, 0));
  using TV = Vec<M::kTangent>;
  return interior_bilinear<M::kTangent>(
      [&](const TV& a, const TV& b) { return TV(g.torsion(x, a, b)); }, v);
}

template <int D>
MultiVector<D> without(const std::vector<Vec<D>>& bs, int skip1, int skip2 = -1) {
  std::vector<Vec<D>> rest;
  for (int l = 0; l < static_cast<int>(bs.size()); ++l)
    if (l != skip1 && l != skip2) rest.push_back(bs[l]);
  return primitive<D>(std::span<const Vec<D>>(rest));
}

}  // namespace detail

/// phi(x_t)(wedge^q T xi_t V0).
template <Geometry M>
PathKernel<M> direct_pullback_kernel(const Form<M>& phi, const QVec<M>& v0) {
  detail::require_degree(phi, v0.degree(), "direct_pullback");
  PathKernel<M> k;
  k.formula = "direct_pullback";
  k.q = phi.degree;
  k.need.derivative = true;
  k.eval = [phi, v0](const M&, const PathSample<M>& p, const TransportStack<M>& st) {
    if (p.grid.steps == 0) return phi(p.points[0], v0);
    return phi(p.points.back(), push<M::kTangent>(st.txi.back(), v0));
  };
  return k;
}

/// phi(x_t)(W_t V0) with the damped transport of the flow's own connection
/// (Levi-Civita for gradient systems).
template <Geometry M>
PathKernel<M> direct_damped_kernel(const Form<M>& phi, const QVec<M>& v0) {
  detail::require_degree(phi, v0.degree(), "direct_damped");
  PathKernel<M> k;
  k.formula = "direct_damped";
  k.q = phi.degree;
  k.need.breve_max = phi.degree;
  k.eval = [phi, v0](const M&, const PathSample<M>& p, const TransportStack<M>& st) {
    if (p.grid.steps == 0) return phi(p.points[0], v0);
    return phi(p.points.back(), detail::apply<M>(st.breve[v0.degree()].back(), v0));
  };
  return k;
}

/// (1 / int rho) f(x_t) sum_k rho_k <W_k v0, X(x_k) dB_k>.
template <Geometry M>
PathKernel<M> bismut_q0_kernel(const Form<M>& f, const typename M::TVec& v0, const Weights& w) {
  detail::require_degree(f, 0, "bismut_q0");
  PathKernel<M> k;
  k.formula = "bismut_q0";
  k.needs_time = true;
  k.need.breve_max = 1;
  k.eval = [f, v0, w](const M& g, const PathSample<M>& p, const TransportStack<M>& st) {
    const auto& wt = st.breve[1];
    double s = 0;
    for (int j = 0; j < p.grid.steps; ++j) {
      if (w.rho[j] == 0) continue;
      typename M::TVec dm = g.x_map(p.points[j]) * p.increments[j];
      s += w.rho[j] * dm.dot(wt[j] * v0);
    }
    double fx = f.coeff(p.points.back())(0);
    return fx * s / w.total;
  };
  return k;
}

/// Intrinsic formula with damped transports:
///   (1 / int rho) phi(W^q_t sum_k rho_k (W^q_k)^-1 i_{dm_k} W^{q+1}_k V0)
///   - phi(W^q_t i_T V0)
/// the last term only where the torsion is non-zero (and invariant).  The sum
/// is pushed forward one step at a time, so no inverse is formed.
template <Geometry M>
PathKernel<M> bismut_intrinsic_kernel(const Form<M>& phi, const QVec<M>& v0, const Weights& w) {
  const int q = v0.degree() - 1;
  require(q >= 0, "bismut_intrinsic: argument must have degree at least one");
  require(q + 1 <= M::kDim, "bismut_intrinsic: argument degree exceeds the dimension");
  detail::require_degree(phi, q, "bismut_intrinsic");
  PathKernel<M> k;
  k.formula = "bismut_intrinsic";
  k.q = q;
  k.needs_time = true;
  k.need.breve_max = q + 1;
  k.eval = [phi, v0, w, q](const M& g, const PathSample<M>& p, const TransportStack<M>& st) {
    const auto& wq1 = st.breve[q + 1];
    auto acc = QVec<M>(q);
    for (int j = 0; j < p.grid.steps; ++j) {
      const auto& x = p.points[j];
      if (w.rho[j] != 0) {
        typename M::TVec dm = g.x_map(x) * p.increments[j];
        acc += w.rho[j] * interior<M::kTangent>(dm, detail::apply<M>(wq1[j], v0));
      }
      acc = detail::apply<M>(damped_step(g, x, p.points[j + 1], p.grid.h, q, DampedMode::breve), acc);
    }
    const auto& xt = p.points.back();
    double value = phi(xt, acc) / w.total;
    if (q >= 1 && !detail::torsion_free(g, p.points[0])) {
      auto it = detail::torsion_interior(g, p.points[0], v0);
      value -= phi(xt, detail::apply<M>(st.breve[q].back(), it));
    }
    return value;
  };
  return k;
}

/// Torsion part of the flow formula alone, divided by int rho:
///   sum_{i<j} (-1)^{i+j+1} phi(T xi_t (C_ij ^ b without i, j)) / int rho
/// with C_ij = sum_k rho_k h (T xi_k)^-1 T(T xi_k b^i, T xi_k b^j).
template <Geometry M>
double flow_torsion_term(const M& g, const PathSample<M>& p, const std::vector<TMat<M>>& txi,
                         const Form<M>& phi, const std::vector<typename M::TVec>& bs,
                         const Weights& w) {
  constexpr int D = M::kTangent;
  const int n = static_cast<int>(bs.size());
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      auto c = detail::torsion_accumulator(g, p, txi, bs[i], bs[j], w.rho).back();
      if (c.squaredNorm() == 0) continue;
      double sign = ((i + j + 1) % 2 == 0) ? 1.0 : -1.0;
      auto v = wedge(MultiVector<D>::vector(c), detail::without<D>(bs, i, j));
      s += sign * phi(p.points.back(), push<D>(txi.back(), v));
    }
  return s / w.total;
}

/// Flow formula with primitive argument b^1 ^ ... ^ b^{q+1}:
///   (1 / int rho) sum_j (-1)^{j+1} (sum_k rho_k <T xi_k b^j, dm_k>) phi(T xi_t (b without j))
///   - torsion part.
template <Geometry M>
PathKernel<M> bismut_flow_kernel(const Form<M>& phi, const std::vector<typename M::TVec>& bs,
                                 const Weights& w) {
  constexpr int D = M::kTangent;
  const int q = static_cast<int>(bs.size()) - 1;
  require(q >= 0 && q + 1 <= M::kDim, "bismut_flow: need between 1 and dim vectors");
  detail::require_degree(phi, q, "bismut_flow");
  PathKernel<M> k;
  k.formula = "bismut_flow";
  k.q = q;
  k.needs_time = true;
  k.need.derivative = true;
  k.eval = [phi, bs, w, q](const M& g, const PathSample<M>& p, const TransportStack<M>& st) {
    const auto& txi = st.txi;
    double first = 0;
    for (int j = 0; j <= q; ++j) {
      double l = 0;
      for (int s = 0; s < p.grid.steps; ++s) {
        if (w.rho[s] == 0) continue;
        typename M::TVec dm = g.x_map(p.points[s]) * p.increments[s];
        l += w.rho[s] * dm.dot(txi[s] * bs[j]);
      }
      double sign = (j % 2 == 0) ? 1.0 : -1.0;
      first += sign * l * phi(p.points.back(), push<D>(txi.back(), detail::without<D>(bs, j)));
    }
    return first / w.total - flow_torsion_term(g, p, txi, phi, bs, w);
  };
  return k;
}

/// The torsion part on its own (identically zero on gradient systems).
template <Geometry M>
PathKernel<M> flow_torsion_kernel(const Form<M>& phi, const std::vector<typename M::TVec>& bs,
                                  const Weights& w) {
  auto k = bismut_flow_kernel(phi, bs, w);
  k.formula = "flow_torsion";
  k.eval = [phi, bs, w](const M& g, const PathSample<M>& p, const TransportStack<M>& st) {
    return flow_torsion_term(g, p, st.txi, phi, bs, w);
  };
  return k;
}

/// General intrinsic formula:
///   (1 / int rho) phi(W_t sum_k rho_k W_k^-1 (i_{// dB~_k} - h i_T) W_k V0)
/// with dB~ the anti-development increments and // the transport of the
/// flow's connection.
template <Geometry M>
PathKernel<M> bismut_general_intrinsic_kernel(const Form<M>& phi, const QVec<M>& v0,
                                              const Weights& w) {
  const int q = v0.degree() - 1;
  require(q >= 0, "bismut_general_intrinsic: argument must have degree at least one");
  require(q + 1 <= M::kDim, "bismut_general_intrinsic: argument degree exceeds the dimension");
  detail::require_degree(phi, q, "bismut_general_intrinsic");
  PathKernel<M> k;
  k.formula = "bismut_general_intrinsic";
  k.q = q;
  k.needs_time = true;
  k.need.breve_max = q + 1;
  k.eval = [phi, v0, w, q](const M& g, const PathSample<M>& p, const TransportStack<M>& st) {
    const auto& wq1 = st.breve[q + 1];
    auto par = parallel_transport(g, p, Connection::lejan_watanabe);
    auto adb = anti_development(g, p);
    bool twisted = q >= 1 && !detail::torsion_free(g, p.points[0]);
    auto acc = QVec<M>(q);
    for (int j = 0; j < p.grid.steps; ++j) {
      const auto& x = p.points[j];
      if (w.rho[j] != 0) {
        auto top = detail::apply<M>(wq1[j], v0);
        typename M::TVec dm = par[j] * adb[j];
        auto y = interior<M::kTangent>(dm, top);
        if (twisted) y -= p.grid.h * detail::torsion_interior(g, x, top);
        acc += w.rho[j] * y;
      }
      acc = detail::apply<M>(damped_step(g, x, p.points[j + 1], p.grid.h, q, DampedMode::breve), acc);
    }
    return phi(p.points.back(), acc) / w.total;
  };
  return k;
}

/// Left-invariant system on SO(3) from the identity:
///   (1 / int rho) phi(x_t)(Ad(x_t^-1) i_l b) + phi(x_t)(Ad(x_t^-1) i_[,] b)
/// with l = sum_k rho_k Ad(x_k) dB_k and [u, v] = u x v in body coordinates.
inline PathKernel<SO3Left> bismut_lie_group_kernel(const Form<SO3Left>& phi,
                                                   const std::vector<Vec3>& bs, const Weights& w) {
  const int q = static_cast<int>(bs.size()) - 1;
  require(q >= 0 && q + 1 <= 3, "bismut_lie_group: need between 1 and 3 vectors");
  detail::require_degree(phi, q, "bismut_lie_group");
  auto b = primitive<3>(std::span<const Vec3>(bs));
  PathKernel<SO3Left> k;
  k.formula = "bismut_lie_group";
  k.q = q;
  k.needs_time = true;
  k.eval = [phi, b, w, q](const SO3Left& g, const PathSample<SO3Left>& p,
                          const TransportStack<SO3Left>&) {
    if (g.drift().norm() != 0)
      throw std::invalid_argument("bismut_lie_group: the system must be driftless");
    if ((p.points[0] - SO3Left::identity()).norm() > 1e-12)
      throw std::invalid_argument("bismut_lie_group: the path must start at the identity");
    Vec3 l = Vec3::Zero();
    for (int j = 0; j < p.grid.steps; ++j)
      if (w.rho[j] != 0) l += w.rho[j] * (quat::rotation(p.points[j]) * p.increments[j]);
    Mat3 back = quat::rotation(p.points.back()).transpose();
    const auto& xt = p.points.back();
    double value = phi(xt, push<3>(back, interior<3>(l, b))) / w.total;
    if (q >= 1) {
      auto br = interior_bilinear<3>([](const Vec3& u, const Vec3& v) { return Vec3(u.cross(v)); }, b);
      value += phi(xt, push<3>(back, br));
    }
    return value;
  };
  return k;
}

// Single-estimator entry points.

template <Geometry M>
EstimatorReport direct_pullback(const M& g, const typename M::Point& x0, const Form<M>& phi,
                                const QVec<M>& v0, const McParams& mc) {
  return run_kernels(g, x0, {direct_pullback_kernel<M>(phi, v0)}, mc).front();
}

template <Geometry M>
EstimatorReport direct_damped(const M& g, const typename M::Point& x0, const Form<M>& phi,
                              const QVec<M>& v0, const McParams& mc) {
  return run_kernels(g, x0, {direct_damped_kernel<M>(phi, v0)}, mc).front();
}

template <Geometry M>
EstimatorReport bismut_q0(const M& g, const typename M::Point& x0, const Form<M>& f,
                          const typename M::TVec& v0, const ScalarSchedule& rho,
                          const McParams& mc) {
  require(mc.t > 0, "bismut_q0: needs t > 0");
  return run_kernels(g, x0, {bismut_q0_kernel<M>(f, v0, make_weights(rho, mc_grid(mc)))}, mc)
      .front();
}

template <Geometry M>
EstimatorReport bismut_intrinsic(const M& g, const typename M::Point& x0, const Form<M>& phi,
                                 const QVec<M>& v0, const ScalarSchedule& rho,
                                 const McParams& mc) {
  require(mc.t > 0, "bismut_intrinsic: needs t > 0");
  return run_kernels(g, x0, {bismut_intrinsic_kernel<M>(phi, v0, make_weights(rho, mc_grid(mc)))},
                     mc)
      .front();
}

template <Geometry M>
EstimatorReport bismut_flow(const M& g, const typename M::Point& x0, const Form<M>& phi,
                            const std::vector<typename M::TVec>& bs, const ScalarSchedule& rho,
                            const McParams& mc) {
  require(mc.t > 0, "bismut_flow: needs t > 0");
  return run_kernels(g, x0, {bismut_flow_kernel<M>(phi, bs, make_weights(rho, mc_grid(mc)))}, mc)
      .front();
}

template <Geometry M>
EstimatorReport bismut_general_intrinsic(const M& g, const typename M::Point& x0,
                                         const Form<M>& phi, const QVec<M>& v0,
                                         const ScalarSchedule& rho, const McParams& mc) {
  require(mc.t > 0, "bismut_general_intrinsic: needs t > 0");
  return run_kernels(
             g, x0, {bismut_general_intrinsic_kernel<M>(phi, v0, make_weights(rho, mc_grid(mc)))},
             mc)
      .front();
}

inline EstimatorReport bismut_lie_group(const SO3Left& g, const Form<SO3Left>& phi,
                                        const std::vector<Vec3>& bs, const ScalarSchedule& rho,
                                        const McParams& mc) {
  require(mc.t > 0, "bismut_lie_group: needs t > 0");
  return run_kernels(g, SO3Left::identity(),
                     {bismut_lie_group_kernel(phi, bs, make_weights(rho, mc_grid(mc)))}, mc)
      .front();
}

}  // namespace pathforms
