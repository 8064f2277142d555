#pragma once

// Calculus on the driving Wiener space: Cameron-Martin vectors, the derivative
// of the Ito map, brackets of the adapted fields h^i, Shigekawa's divergence
// and cylindrical forms for integration-by-parts checks.

#include "pathforms/flow.hpp"

#include <functional>
#include <vector>

namespace pathforms {

/// Cameron-Martin path stored through its derivative on the grid:
/// h(t_k) = sum_{j<k} hdot_j h.
template <int m>
struct HVector {
  double h = 0;
  std::vector<Vec<m>> hdot;

  HVector() = default;
  HVector(double h_, int steps) : h(h_), hdot(steps, Vec<m>::Zero()) {}

  int steps() const { return static_cast<int>(hdot.size()); }

  Vec<m> value(int k) const {
    Vec<m> s = Vec<m>::Zero();
    for (int j = 0; j < k; ++j) s += hdot[j];
    return s * h;
  }

  double norm() const {
    double s = 0;
    for (const auto& d : hdot) s += d.squaredNorm();
    return std::sqrt(s * h);
  }

  HVector& operator+=(const HVector& o) {
    require(o.hdot.size() == hdot.size(), "HVector: length mismatch");
    for (std::size_t k = 0; k < hdot.size(); ++k) hdot[k] += o.hdot[k];
    return *this;
  }

  HVector operator-(const HVector& o) const {
    HVector r = *this;
    for (std::size_t k = 0; k < hdot.size(); ++k) r.hdot[k] -= o.hdot[k];
    return r;
  }

  HVector operator*(double c) const {
    HVector r = *this;
    for (auto& d : r.hdot) d *= c;
    return r;
  }

  /// Ito integral sum <hdot_k, dB_k>.
  double ito(const std::vector<Vec<m>>& increments) const { return ito_integral(hdot, increments); }
};

template <Geometry M>
using HVec = HVector<M::kNoise>;

/// Left-point integrals R_k = sum_{j<k} rho_j h, k = 0..steps.
inline std::vector<double> running_integral(const std::vector<double>& rho, double h, int steps) {
  require(static_cast<int>(rho.size()) >= steps, "running_integral: schedule too short");
  std::vector<double> r(steps + 1, 0.0);
  for (int k = 0; k < steps; ++k) r[k + 1] = r[k] + rho[k] * h;
  return r;
}

/// hdot_k = rho_k Y(x_k) T xi_k b.
template <Geometry M>
HVec<M> make_h(const M& g, const PathSample<M>& p, const std::vector<TMat<M>>& txi,
               const typename M::TVec& b, const std::vector<double>& rho) {
  require_tangent(g, p.points[0], b, "make_h");
  HVec<M> out(p.grid.h, p.grid.steps);
  for (int k = 0; k < p.grid.steps; ++k) {
    if (rho[k] == 0) continue;
    out.hdot[k] = rho[k] * (g.y_map(p.points[k]) * (txi[k] * b));
  }
  return out;
}

/// T I(h)_k = T xi_k sum_{j<k} (T xi_j)^-1 X(x_j) hdot_j h, accumulated with
/// the per-step Jacobians.
template <Geometry M>
std::vector<typename M::TVec> t_ito(const M& g, const PathSample<M>& p,
                                    const std::vector<TMat<M>>& jac, const HVec<M>& hv) {
  require(static_cast<int>(jac.size()) == p.grid.steps && hv.steps() == p.grid.steps,
          "t_ito: length mismatch");
  std::vector<typename M::TVec> out(p.grid.steps + 1, M::TVec::Zero());
  for (int k = 0; k < p.grid.steps; ++k)
    out[k + 1] = jac[k] * (out[k] + (g.x_map(p.points[k]) * hv.hdot[k]) * p.grid.h);
  return out;
}

namespace detail {

// C_k = sum_{j<k} rho_j h (T xi_j)^-1 T(T xi_j b1, T xi_j b2), k = 0..steps.
template <Geometry M>
std::vector<typename M::TVec> torsion_accumulator(const M& g, const PathSample<M>& p,
                                                  const std::vector<TMat<M>>& txi,
                                                  const typename M::TVec& b1,
                                                  const typename M::TVec& b2,
                                                  const std::vector<double>& rho) {
  std::vector<typename M::TVec> c(p.grid.steps + 1, M::TVec::Zero());
  const auto& x0 = p.points[0];
  for (int k = 0; k < p.grid.steps; ++k) {
    c[k + 1] = c[k];
    if (rho[k] == 0) continue;
    const auto& x = p.points[k];
    typename M::TVec tor = g.torsion(x, txi[k] * b1, txi[k] * b2);
    if (tor.squaredNorm() == 0) continue;
    c[k + 1] += rho[k] * p.grid.h * (tangent_inverse(g, x0, x, txi[k]) * tor);
  }
  return c;
}

}  // namespace detail

/// Derivative of the bracket [h^1, h^2] of the fields built by make_h:
///   rho_k R_{k+1} dY(T xi_k b1, T xi_k b2) + rho_k Y(x_k) T xi_k C_k.
/// With R taken at k + 1 the Ito map of the result is R_k T xi_k C_k exactly.
template <Geometry M>
HVec<M> bracket_formula(const M& g, const PathSample<M>& p, const std::vector<TMat<M>>& txi,
                        const typename M::TVec& b1, const typename M::TVec& b2,
                        const std::vector<double>& rho) {
  require_tangent(g, p.points[0], b1, "bracket_formula");
  require_tangent(g, p.points[0], b2, "bracket_formula");
  HVec<M> out(p.grid.h, p.grid.steps);
  auto r = running_integral(rho, p.grid.h, p.grid.steps);
  auto c = detail::torsion_accumulator(g, p, txi, b1, b2, rho);
  for (int k = 0; k < p.grid.steps; ++k) {
    if (rho[k] == 0) continue;
    const auto& x = p.points[k];
    out.hdot[k] = rho[k] * (r[k + 1] * g.dy(x, txi[k] * b1, txi[k] * b2) +
                            g.y_map(x) * (txi[k] * c[k]));
  }
  return out;
}

/// T I([h^1, h^2])_k = R_k T xi_k C_k.
template <Geometry M>
std::vector<typename M::TVec> t_ito_bracket(const M& g, const PathSample<M>& p,
                                            const std::vector<TMat<M>>& txi,
                                            const typename M::TVec& b1,
                                            const typename M::TVec& b2,
                                            const std::vector<double>& rho) {
  std::vector<typename M::TVec> out(p.grid.steps + 1, M::TVec::Zero());
  auto r = running_integral(rho, p.grid.h, p.grid.steps);
  auto c = detail::torsion_accumulator(g, p, txi, b1, b2, rho);
  for (int k = 0; k <= p.grid.steps; ++k) out[k] = r[k] * (txi[k] * c[k]);
  return out;
}

/// Finite-difference bracket D_{h1} h2 - D_{h2} h1: re-solve the flow with the
/// noise shifted by eps hdot h and difference the rebuilt field.
template <Geometry M>
HVec<M> bracket_fd_oracle(const M& g, const PathSample<M>& base, const typename M::TVec& b1,
                          const typename M::TVec& b2, const std::vector<double>& rho,
                          double eps) {
  require(eps > 0, "bracket_fd_oracle: eps must be positive");
  auto field = [&](const PathSample<M>& p, const typename M::TVec& b) {
    return make_h(g, p, derivative_flow(g, p), b, rho);
  };
  auto shifted = [&](const HVec<M>& dir) {
    auto inc = base.increments;
    for (int k = 0; k < base.grid.steps; ++k) inc[k] += eps * base.grid.h * dir.hdot[k];
    return simulate_increments(g, base.points[0], base.grid, std::move(inc));
  };
  HVec<M> h1 = field(base, b1), h2 = field(base, b2);
  HVec<M> d12 = (field(shifted(h1), b2) - h2) * (1.0 / eps);
  HVec<M> d21 = (field(shifted(h2), b1) - h1) * (1.0 / eps);
  return d12 - d21;
}

/// Wedge of H-vectors with a scalar coefficient.
template <int m>
struct WedgeTerm {
  double coeff = 1;
  std::vector<HVector<m>> factors;
};

/// div(h^1 ^ ... ^ h^p) = sum_j (-1)^j (int <hdot^j, dB>) h^(j omitted)
///                      - sum_{i<j} (-1)^{i+j} [h^i, h^j] ^ h^(i, j omitted),
/// indices from 1, both sums over all p factors.  A null bracket callback
/// means the fields commute.
template <int m>
std::vector<WedgeTerm<m>> shigekawa_div(
    const std::vector<HVector<m>>& hs, const std::vector<Vec<m>>& increments,
    const std::function<HVector<m>(int, int)>& bracket = nullptr) {
  const int p = static_cast<int>(hs.size());
  require(p >= 1, "shigekawa_div: needs at least one field");
  std::vector<WedgeTerm<m>> out;
  for (int j = 0; j < p; ++j) {
    WedgeTerm<m> t;
    t.coeff = (j % 2 == 0 ? -1.0 : 1.0) * hs[j].ito(increments);
    for (int l = 0; l < p; ++l)
      if (l != j) t.factors.push_back(hs[l]);
    out.push_back(std::move(t));
  }
  if (bracket)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        WedgeTerm<m> t;
        t.coeff = ((i + j) % 2 == 0) ? -1.0 : 1.0;
        t.factors.push_back(bracket(i, j));
        for (int l = 0; l < p; ++l)
          if (l != i && l != j) t.factors.push_back(hs[l]);
        out.push_back(std::move(t));
      }
  return out;
}

/// Cylindrical form on Wiener space:
///   phi_w(k^1, ..., k^q) = g(w(t_s)) det[<c_a, k^b(t_{tau_a})>]
/// with g linear or a cosine.  Its derivative is dg ^ (constant part).
template <int m>
struct CylindricalForm {
  enum class Kernel { linear, cosine };

  Kernel kernel = Kernel::cosine;
  Vec<m> freq = Vec<m>::Zero();
  double phase = 0;
  int sample = 0;                // grid index of the path evaluation
  std::vector<Vec<m>> coef;      // one per slot
  std::vector<int> times;        // grid index per slot

  int degree() const { return static_cast<int>(coef.size()); }

  double kernel_value(const Vec<m>& w) const {
    return kernel == Kernel::linear ? freq.dot(w) : std::cos(freq.dot(w) + phase);
  }

  Vec<m> kernel_grad(const Vec<m>& w) const {
    return kernel == Kernel::linear ? freq : Vec<m>(-std::sin(freq.dot(w) + phase) * freq);
  }

  /// det[<c_a, k^b(t_{tau_a})>] for the given H-vectors.
  double constant_part(const std::vector<const HVector<m>*>& ks) const {
    const int q = degree();
    require(static_cast<int>(ks.size()) == q, "cylindrical form: wrong number of arguments");
    if (q == 0) return 1.0;
    Eigen::MatrixXd a(q, q);
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < q; ++c) a(r, c) = coef[r].dot(ks[c]->value(times[r]));
    return a.determinant();
  }

  double operator()(const Vec<m>& w_sample, const std::vector<const HVector<m>*>& ks) const {
    return kernel_value(w_sample) * constant_part(ks);
  }

  /// dphi(k^0, ..., k^q) = sum_i (-1)^i <grad g, k^i(t_s)> constant_part(k without i).
  double d(const Vec<m>& w_sample, const std::vector<const HVector<m>*>& ks) const {
    require(static_cast<int>(ks.size()) == degree() + 1,
            "cylindrical form: derivative needs one more argument");
    Vec<m> grad = kernel_grad(w_sample);
    double total = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      std::vector<const HVector<m>*> rest;
      for (std::size_t l = 0; l < ks.size(); ++l)
        if (l != i) rest.push_back(ks[l]);
      total += (i % 2 ? -1.0 : 1.0) * grad.dot(ks[i]->value(sample)) * constant_part(rest);
    }
    return total;
  }
};

/// Path value w(t_k) = sum_{j<k} dB_j.
template <int m>
Vec<m> path_value(const std::vector<Vec<m>>& increments, int k) {
  Vec<m> s = Vec<m>::Zero();
  for (int j = 0; j < k; ++j) s += increments[j];
  return s;
}

/// One sample of dphi(h) + phi(div h); its mean vanishes.
template <int m>
double ibp_residual(const CylindricalForm<m>& phi, const std::vector<Vec<m>>& increments,
                    const std::vector<HVector<m>>& hs, const std::vector<WedgeTerm<m>>& div) {
  require(static_cast<int>(hs.size()) == phi.degree() + 1, "ibp: form degree must be p - 1");
  Vec<m> w = path_value(increments, phi.sample);
  std::vector<const HVector<m>*> args;
  for (const auto& h : hs) args.push_back(&h);
  double total = phi.d(w, args);
  for (const auto& t : div) {
    if (t.coeff == 0) continue;
    std::vector<const HVector<m>*> fs;
    for (const auto& f : t.factors) fs.push_back(&f);
    total += t.coeff * phi(w, fs);
  }
  return total;
}

}  // namespace pathforms
