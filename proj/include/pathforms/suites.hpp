#pragma once

// Named verification suites.  Each suite turns a validated config into a list
// of check rows (one per comparison); the CLI writes them out and the
// acceptance binary reduces them to one verdict per criterion.

#include "pathforms/config.hpp"
#include "pathforms/estimators.hpp"
#include "pathforms/hspaces.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

namespace pathforms {

struct CheckRow {
  std::string suite;
  std::string formula_id;
  std::string manifold;
  int q = 0;
  double t = 0, h = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double value = 0, std_error = 0, target = 0;
  std::string provenance;
  std::string rule;
  bool pass = false;
};

struct SuiteResult {
  ExperimentConfig cfg;  // resolved: manifold and names filled in
  std::uint64_t digest = 0;
  std::vector<CheckRow> rows;

  bool pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return !rows.empty();
  }
};

inline const std::vector<std::pair<std::string, std::string>>& suite_descriptions() {
  static const std::vector<std::pair<std::string, std::string>> d{
      {"bismut_q0", "scalar Bismut formula for d(P_t f), spectral and paired checks"},
      {"bismut_q1", "intrinsic and flow formulas for d(P_t phi) on 1-forms"},
      {"filtering", "pull-back by the flow against damped transport, q = 0, 1, 2"},
      {"bracket", "brackets of the adapted H-fields against finite differences"},
      {"ibp", "Shigekawa theorem, integration by parts on Wiener space"},
      {"h2identity", "two-vector identity U + Q(U) = Z along a path"},
      {"h2divergence", "divergence of the two-vector field Z, integration by parts"},
      {"liegroup", "group formula on SO(3) against Haar quadrature and the flow formula"},
      {"all", "every suite above"}};
  return d;
}

inline std::vector<std::string> supported_manifolds(const std::string& suite) {
  const auto& all = manifold_names();
  if (suite == "bismut_q1" || suite == "ibp")
    return {all.begin() + 1, all.end()};
  if (suite == "h2identity" || suite == "h2divergence")
    return {"sphere2", "sphere3", "clifford_torus", "so3_biinvariant"};
  if (suite == "liegroup") return {"so3_left"};
  return all;
}

inline std::string default_manifold(const std::string& suite) {
  if (suite == "bracket" || suite == "ibp" || suite == "liegroup") return "so3_left";
  return "sphere2";
}

// Catalogue defaults per manifold.
inline std::string default_function(const std::string& m) {
  if (m == "sphere1") return "coord1";
  if (m == "sphere2" || m == "sphere3") return "height";
  if (m == "clifford_torus") return "cos_a_cos_b";
  return "g12";
}

inline std::string default_form(const std::string& suite, const std::string& m) {
  if (suite == "liegroup") return "theta3";
  if (m == "sphere1") return "rotation";
  if (m == "sphere2" || m == "sphere3") return suite == "h2divergence" ? "rotation" : "mixed";
  if (m == "clifford_torus") return "cos_b_da";
  return "g12_theta3";
}

inline std::string default_form2(const std::string& m) {
  if (m == "sphere2") return "height_area";
  if (m == "sphere3") return "height_plane";
  if (m == "clifford_torus") return "da_db";
  if (m == "sphere1") return "";
  return "g12_theta12";
}

/// Calls f with a default-constructed geometry of the given name.
template <class F>
decltype(auto) with_manifold(const std::string& name, F&& f) {
  if (name == "sphere1") return f(Sphere1{});
  if (name == "sphere2") return f(Sphere2{});
  if (name == "sphere3") return f(Sphere3{});
  if (name == "clifford_torus") return f(CliffordTorus{});
  if (name == "so3_left") return f(SO3Left{});
  if (name == "so3_right") return f(SO3Right{});
  if (name == "so3_biinvariant") return f(SO3Bi{});
  require_one_of("manifold", name, manifold_names());
  throw ConfigError("unreachable");
}

template <Geometry M>
typename M::Point default_base(const M&) {
  if constexpr (std::is_same_v<M, Sphere1>) {
    return Vec<2>(std::cos(1.0), std::sin(1.0));
  } else if constexpr (std::is_same_v<M, Sphere2>) {
    return Vec3(0.6, 0.48, 0.64);
  } else if constexpr (std::is_same_v<M, Sphere3>) {
    return Vec4(0.5, 0.5, 0.5, 0.5);
  } else if constexpr (std::is_same_v<M, CliffordTorus>) {
    return CliffordTorus::from_angles(0.7, -0.4);
  } else {
    return M::identity();
  }
}

template <Geometry M>
typename M::Point base_point(const M& g, const ExperimentConfig& cfg) {
  if (!cfg.x0) return default_base(g);
  if (static_cast<int>(cfg.x0->size()) != M::kAmbient)
    throw ConfigError("x0 for " + g.name() + " needs " + std::to_string(M::kAmbient) +
                      " coordinates, got " + std::to_string(cfg.x0->size()));
  typename M::Point x;
  for (int i = 0; i < M::kAmbient; ++i) x(i) = (*cfg.x0)[i];
  try {
    require_on_manifold(g, x, "x0");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("x0 is not a point of ") + g.name() + ": " + e.what());
  }
  return x;
}

template <Geometry M>
Form<M> config_form(const M& g, const std::string& name, int degree, const std::string& key) {
  Form<M> f;
  try {
    f = find_form(g, name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
  if (f.degree != degree)
    throw ConfigError(key + " '" + name + "' on " + g.name() + " has degree " +
                      std::to_string(f.degree) + ", this suite needs degree " +
                      std::to_string(degree));
  return f;
}

/// Fills in the suite defaults and checks everything that depends on the
/// manifold.  Throws ConfigError.
inline ExperimentConfig resolve(ExperimentConfig c) {
  check_basic(c);
  if (c.suite == "all") return c;  // an empty manifold means each suite's default
  if (c.manifold.empty()) c.manifold = default_manifold(c.suite);
  require_one_of("manifold for suite " + c.suite, c.manifold, supported_manifolds(c.suite));
  if (c.function.empty()) c.function = default_function(c.manifold);
  if (c.form.empty()) c.form = default_form(c.suite, c.manifold);
  if (c.form2.empty()) c.form2 = default_form2(c.manifold);
  if (c.richardson) {
    double k = c.t / (2 * c.h);
    if (std::abs(k - std::llround(k)) > 1e-9 * std::max(1.0, k))
      throw ConfigError("t must be an even multiple of h for step halving");
  }
  with_manifold(c.manifold, [&](const auto& g) {
    base_point(g, c);
    config_form(g, c.function, 0, "function");
    if (c.suite != "bracket" && c.suite != "ibp" && c.suite != "h2identity")
      config_form(g, c.form, 1, "form");
    if (c.suite == "filtering" && !c.form2.empty()) config_form(g, c.form2, 2, "form2");
    return 0;
  });
  if (c.suite == "liegroup" && c.x0) {
    Vec4 e = SO3Left::identity();
    for (int i = 0; i < 4; ++i)
      if ((*c.x0)[i] != e(i)) throw ConfigError("liegroup: x0 must be the identity");
  }
  return c;
}

namespace detail {

struct RowMaker {
  const ExperimentConfig& cfg;
  std::string manifold;

  CheckRow base(const std::string& id, int q, std::size_t n) const {
    CheckRow r;
    r.suite = cfg.suite;
    r.formula_id = id;
    r.manifold = manifold;
    r.q = q;
    r.t = cfg.t;
    r.h = cfg.h;
    r.n = n;
    r.seed = cfg.seed;
    return r;
  }

  CheckRow stat(const std::string& id, const EstimatorReport& e, double target,
                const std::string& prov) const {
    auto r = base(id, e.q, e.n);
    r.value = e.value;
    r.std_error = e.std_error;
    r.target = target;
    r.provenance = prov;
    r.pass = within_se(e, target, cfg.tol.se_factor);
    r.rule = "|value - target| <= " + num(cfg.tol.se_factor) + " SE";
    return r;
  }

  /// Control: the quantity must be clearly non-zero.
  CheckRow control(const std::string& id, const EstimatorReport& e, const std::string& prov) const {
    auto r = base(id, e.q, e.n);
    r.value = e.value;
    r.std_error = e.std_error;
    r.provenance = prov;
    r.pass = std::abs(e.value) > cfg.tol.control_factor * e.std_error;
    r.rule = "|value| > " + num(cfg.tol.control_factor) + " SE";
    return r;
  }

  CheckRow exact(const std::string& id, int q, std::size_t n, double value, double target,
                 const std::string& prov) const {
    auto r = base(id, q, n);
    r.value = value;
    r.target = target;
    r.provenance = prov;
    r.pass = value == target;
    r.rule = "value == target";
    return r;
  }

  CheckRow below(const std::string& id, int q, std::size_t n, double value, double limit,
                 const std::string& prov) const {
    auto r = base(id, q, n);
    r.value = value;
    r.provenance = prov;
    r.pass = value < limit;
    r.rule = "value < " + num(limit);
    return r;
  }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }
};

inline double max_abs(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

inline EstimatorReport from_samples(std::string formula, int q, const ExperimentConfig& cfg,
                                    std::vector<double> xs) {
  EstimatorReport r;
  r.formula = std::move(formula);
  r.q = q;
  r.t = cfg.t;
  r.h = cfg.h;
  r.seed = cfg.seed;
  r.samples = std::move(xs);
  summarize(r);
  return r;
}

inline McParams mc_of(const ExperimentConfig& cfg, int threads) {
  McParams mc;
  mc.t = cfg.t;
  mc.h = cfg.h;
  mc.paths = cfg.paths;
  mc.seed = cfg.seed;
  mc.threads = threads;
  mc.digest = digest(cfg);
  return mc;
}

template <Geometry M>
typename M::TVec steepest(const M& g, const Form<M>& f, const typename M::Point& x) {
  typename M::TVec v = g.tangent_projector(x) * f.dcoeff(x);
  if (v.norm() < 1e-12) return g.frame(x).col(0);
  return v.normalized();
}

template <Geometry M>
std::vector<typename M::TVec> frame_vectors(const M& g, const typename M::Point& x, int n) {
  std::vector<typename M::TVec> out;
  for (int i = 0; i < n; ++i) out.push_back(g.frame(x).col(i));
  return out;
}

template <Geometry M>
QVec<M> wedge_of(const std::vector<typename M::TVec>& bs) {
  return primitive<M::kTangent>(std::span<const typename M::TVec>(bs));
}

template <Geometry M>
std::vector<typename M::Noise> coarsen(const std::vector<typename M::Noise>& fine) {
  std::vector<typename M::Noise> out(fine.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = fine[2 * k] + fine[2 * k + 1];
  return out;
}

/// Spectral value of d(P_t f)(v) when f is an eigenfunction; the SO(3)
/// matrix entries use a Haar quadrature for the eigenvalue.
template <Geometry M>
std::optional<std::pair<double, std::string>> spectral_target(const M& g, const Form<M>& f,
                                                              const typename M::Point& x,
                                                              const QVec<M>& v, double t) {
  double lam = 0;
  std::string prov;
  if (f.eigenvalue) {
    lam = *f.eigenvalue;
    prov = "closed-form spectrum";
  } else if constexpr (M::kAmbient == 4 && M::kTangent == 3) {
    if (f.degree != 0) return std::nullopt;
    lam = haar_eigenvalue(g, f);
    prov = "Haar quadrature eigenvalue";
  } else {
    return std::nullopt;
  }
  return std::pair{std::exp(lam * t) * f.d(x, v), prov};
}

// Two-vector used along paths for the H2 suites.
template <Geometry M>
QVec<M> h2_vector(const M& g, const typename M::Point& x0) {
  auto fr = g.frame(x0);
  typename M::TVec a = fr.col(0), b = fr.col(1);
  QVec<M> v = primitive<M::kTangent>({a, b});
  if constexpr (M::kDim > 2) {
    typename M::TVec c = fr.col(2);
    v += 0.5 * primitive<M::kTangent>({b, c});
  }
  return v;
}

template <int m>
Vec<m> pattern(std::initializer_list<double> xs) {
  Vec<m> v = Vec<m>::Zero();
  int i = 0;
  for (double x : xs) {
    if (i == m) break;
    v(i++) = x;
  }
  return v;
}

}  // namespace detail

template <Geometry M>
std::vector<CheckRow> suite_bismut_q0(const M& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  auto x0 = base_point(g, cfg);
  auto f = config_form(g, cfg.function, 0, "function");
  auto one = config_form(g, "one", 0, "function");
  auto df = exterior_derivative(f);
  auto v0 = detail::steepest(g, f, x0);
  auto mc = detail::mc_of(cfg, threads);
  Grid grid(cfg.t, cfg.h);
  auto w = make_weights(ScalarSchedule::named(cfg.rho, cfg.t), grid);
  auto w_alt = make_weights(ScalarSchedule::named(cfg.rho_alt, cfg.t), grid);
  auto rs = run_kernels(g, x0,
                        {bismut_q0_kernel<M>(f, v0, w), bismut_q0_kernel<M>(f, v0, w_alt),
                         bismut_q0_kernel<M>(one, v0, w),
                         direct_pullback_kernel<M>(df, QVec<M>::vector(v0))},
                        mc);
  std::vector<CheckRow> rows;
  auto eig = detail::spectral_target(g, f, x0, QVec<M>::vector(v0), cfg.t);
  if (eig) {
    auto r = rm.stat("bismut_q0", rs[0], eig->first, eig->second);
    double rel = std::abs(rs[0].value - eig->first) / std::abs(eig->first);
    r.pass = r.pass && rel < cfg.tol.relative;
    r.rule += " and relative < " + detail::RowMaker::num(cfg.tol.relative);
    rows.push_back(r);
  }
  rows.push_back(rm.stat("bismut_q0-direct_pullback", paired_compare(rs[0], rs[3]), 0.0,
                         "paired difference, same paths"));
  rows.push_back(rm.stat("bismut_q0[" + cfg.rho_alt + "]-bismut_q0[" + cfg.rho + "]",
                         paired_compare(rs[1], rs[0]), 0.0, "rho invariance, same paths"));
  rows.push_back(rm.stat("bismut_q0[one]", rs[2], 0.0, "constant function"));
  return rows;
}

template <Geometry M>
std::vector<CheckRow> suite_bismut_q1(const M& g, const ExperimentConfig& cfg, int threads) {
  std::vector<CheckRow> rows;
  if constexpr (M::kDim >= 2) {
    detail::RowMaker rm{cfg, g.name()};
    auto x0 = base_point(g, cfg);
    auto phi = config_form(g, cfg.form, 1, "form");
    auto dphi = exterior_derivative(phi);
    auto exact = exterior_derivative(config_form(g, cfg.function, 0, "function"));
    auto bs = detail::frame_vectors(g, x0, 2);
    auto v0 = detail::wedge_of<M>(bs);
    auto mc = detail::mc_of(cfg, threads);
    Grid grid(cfg.t, cfg.h);
    auto w = make_weights(ScalarSchedule::named(cfg.rho, cfg.t), grid);
    auto w_alt = make_weights(ScalarSchedule::named(cfg.rho_alt, cfg.t), grid);
    std::vector<PathKernel<M>> ks{bismut_intrinsic_kernel<M>(phi, v0, w),
                                  direct_pullback_kernel<M>(dphi, v0),
                                  bismut_flow_kernel<M>(phi, bs, w),
                                  bismut_flow_kernel<M>(phi, bs, w_alt),
                                  flow_torsion_kernel<M>(phi, bs, w),
                                  bismut_intrinsic_kernel<M>(exact, v0, w)};
    const bool twisted = !g.is_gradient();
    if (twisted) ks.push_back(bismut_general_intrinsic_kernel<M>(phi, v0, w));
    auto rs = run_kernels(g, x0, ks, mc);
    const std::string pair = "paired difference, same paths";
    rows.push_back(rm.stat("bismut_intrinsic-direct_pullback", paired_compare(rs[0], rs[1]), 0.0, pair));
    rows.push_back(rm.stat("bismut_intrinsic[" + exact.name + "]", rs[5], 0.0, "exact form"));
    if (!twisted)
      rows.push_back(rm.exact("flow_torsion", 1, rs[4].n, detail::max_abs(rs[4].samples), 0.0,
                              "gradient system, max over paths"));
    rows.push_back(rm.stat("bismut_flow-direct_pullback", paired_compare(rs[2], rs[1]), 0.0, pair));
    rows.push_back(rm.stat("bismut_flow[" + cfg.rho_alt + "]-bismut_flow[" + cfg.rho + "]",
                           paired_compare(rs[3], rs[2]), 0.0, "rho invariance, same paths"));
    rows.push_back(rm.stat("bismut_flow-bismut_intrinsic", paired_compare(rs[2], rs[0]), 0.0, pair));
    if (twisted)
      rows.push_back(rm.stat("bismut_general_intrinsic-direct_pullback",
                             paired_compare(rs[6], rs[1]), 0.0, pair));
    if (auto eig = detail::spectral_target(g, phi, x0, v0, cfg.t))
      rows.push_back(rm.stat("bismut_intrinsic", rs[0], eig->first, eig->second));
  }
  return rows;
}

template <Geometry M>
std::vector<CheckRow> suite_filtering(const M& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  auto x0 = base_point(g, cfg);
  auto f = config_form(g, cfg.function, 0, "function");
  auto phi = config_form(g, cfg.form, 1, "form");
  auto bs = detail::frame_vectors(g, x0, std::min(2, M::kDim));
  std::vector<PathKernel<M>> ks{direct_pullback_kernel<M>(f, QVec<M>::scalar(1.0)),
                                direct_damped_kernel<M>(f, QVec<M>::scalar(1.0)),
                                direct_pullback_kernel<M>(phi, QVec<M>::vector(bs[0])),
                                direct_damped_kernel<M>(phi, QVec<M>::vector(bs[0]))};
  bool two = M::kDim >= 2 && !cfg.form2.empty();
  if (two) {
    auto psi = config_form(g, cfg.form2, 2, "form2");
    ks.push_back(direct_pullback_kernel<M>(psi, detail::wedge_of<M>(bs)));
    ks.push_back(direct_damped_kernel<M>(psi, detail::wedge_of<M>(bs)));
  }
  auto rs = run_kernels(g, x0, ks, detail::mc_of(cfg, threads));
  std::vector<CheckRow> rows;
  auto d0 = paired_compare(rs[0], rs[1]);
  rows.push_back(rm.exact("direct_pullback-direct_damped", 0, d0.n, detail::max_abs(d0.samples),
                          0.0, "both equal f(x_t), max over paths"));
  const std::string pair = "paired difference, same paths";
  rows.push_back(rm.stat("direct_pullback-direct_damped", paired_compare(rs[2], rs[3]), 0.0, pair));
  if (two)
    rows.push_back(rm.stat("direct_pullback-direct_damped", paired_compare(rs[4], rs[5]), 0.0, pair));
  return rows;
}

template <Geometry M>
std::vector<CheckRow> suite_bracket(const M& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  auto x0 = base_point(g, cfg);
  Grid grid(cfg.t, cfg.h);
  auto bs = detail::frame_vectors(g, x0, std::min(2, M::kDim));
  if (bs.size() < 2) bs.push_back(bs[0]);
  auto rho = ScalarSchedule::named(cfg.rho, cfg.t).sample(grid.h, grid.steps);
  const int n = cfg.samples;
  std::vector<double> formula(n), fd(n), rel(n), closed(n, 0.0);
  constexpr bool left = std::is_same_v<M, SO3Left>;
  const bool use_closed = left && cfg.rho == "one" && (x0 - default_base(g)).norm() == 0;
  parallel_for(n, threads, [&](std::size_t i, int) {
    auto p = simulate(g, x0, grid, cfg.seed, i);
    auto txi = derivative_flow(g, p);
    auto br = bracket_formula(g, p, txi, bs[0], bs[1], rho);
    auto oracle = bracket_fd_oracle(g, p, bs[0], bs[1], rho, cfg.fd_eps);
    formula[i] = br.norm();
    fd[i] = oracle.norm();
    rel[i] = br.norm() > 0 ? (oracle - br).norm() / br.norm() : (oracle - br).norm();
    if constexpr (left) {
      if (use_closed) {
        HVec<M> want(grid.h, grid.steps);
        for (int k = 0; k < grid.steps; ++k)
          want.hdot[k] = -2 * grid.time(k) * quat::rotation(p.points[k]).transpose() * bs[0].cross(bs[1]);
        closed[i] = (br - want).norm() / want.norm();
      }
    }
  }, 1);
  std::vector<CheckRow> rows;
  if (g.is_gradient()) {
    rows.push_back(rm.exact("bracket_formula", 2, n, detail::max_abs(formula), 0.0,
                            "gradient system, H-norm, max over paths"));
    rows.push_back(rm.below("bracket_fd_oracle", 2, n, detail::max_abs(fd), cfg.tol.fd_zero,
                            "finite differences, H-norm, max over paths"));
  } else {
    rows.push_back(rm.below("bracket_formula-bracket_fd_oracle", 2, n, detail::max_abs(rel),
                            cfg.tol.fd_relative, "finite differences, relative H-norm, max over paths"));
    if (use_closed)
      rows.push_back(rm.below("bracket_formula-closed_form", 2, n, detail::max_abs(closed),
                              cfg.tol.closed_form, "-2t Ad(x_t^-1)[b1, b2], relative H-norm, max over paths"));
  }
  return rows;
}

template <Geometry M>
std::vector<CheckRow> suite_ibp(const M& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  std::vector<CheckRow> rows;
  Grid grid(cfg.t, cfg.h);
  const int n = grid.steps;
  const std::size_t paths = cfg.paths;

  // p = 1 on flat Wiener space: a deterministic field against a linear
  // functional, then an adapted field against a cosine.
  {
    constexpr int m = 2;
    HVector<m> hv(grid.h, n);
    for (int k = 0; k < n; ++k) hv.hdot[k] = Vec<m>(std::cos(grid.time(k)), 1.0 - grid.time(k));
    CylindricalForm<m> lin;
    lin.kernel = CylindricalForm<m>::Kernel::linear;
    lin.freq = Vec<m>(0.5, -2.0);
    lin.sample = n;
    CylindricalForm<m> cosf;
    cosf.freq = Vec<m>(1.1, 0.3);
    cosf.sample = (3 * n) / 4;
    std::vector<double> a(paths), b(paths);
    parallel_for(paths, threads, [&](std::size_t i, int) {
      NoiseDriver<m> drv(cfg.seed, i, grid.h, n);
      std::vector<Vec<m>> inc(n);
      for (int k = 0; k < n; ++k) inc[k] = drv.increment(k);
      a[i] = ibp_residual(lin, inc, {hv}, shigekawa_div<m>({hv}, inc));
      HVector<m> ad(grid.h, n);
      Vec<m> w = Vec<m>::Zero();
      for (int k = 0; k < n; ++k) {
        ad.hdot[k] = std::sin(w.dot(Vec<m>(1.0, -0.7)) + 0.3) * Vec<m>(1.0, 2.0);
        w += inc[k];
      }
      b[i] = ibp_residual(cosf, inc, {ad}, shigekawa_div<m>({ad}, inc));
    });
    auto ra = detail::from_samples("ibp_flat_linear", 1, cfg, std::move(a));
    auto rb = detail::from_samples("ibp_flat_adapted", 1, cfg, std::move(b));
    auto r1 = rm.stat("ibp_flat_linear", ra, 0.0, "flat Wiener space, deterministic field");
    r1.manifold = "wiener2";
    auto r2 = rm.stat("ibp_flat_adapted", rb, 0.0, "flat Wiener space, adapted field");
    r2.manifold = "wiener2";
    rows.push_back(r1);
    rows.push_back(r2);
  }

  // p = 2 with the adapted fields Y(x) T xi b of the manifold system; the
  // bracket terms vanish only on gradient systems.
  if constexpr (M::kDim >= 2) {
    constexpr int m = M::kNoise;
    auto x0 = base_point(g, cfg);
    auto bs = detail::frame_vectors(g, x0, 2);
    auto rho_s = ScalarSchedule::named(cfg.rho, cfg.t);
    auto residuals = [&](const Grid& gr, const std::vector<Vec<m>>& inc) {
      auto rho = rho_s.sample(gr.h, gr.steps);
      CylindricalForm<m> phi;
      phi.freq = detail::pattern<m>({0.8, -0.5, 0.6, 0.3, -0.4, 0.2});
      phi.sample = gr.steps;
      phi.coef = {detail::pattern<m>({0.1, 0.2, 1.0, 0.3, -0.2, 0.4})};
      phi.times = {gr.steps};
      auto p = simulate_increments(g, x0, gr, inc);
      auto txi = derivative_flow(g, p);
      std::vector<HVec<M>> hs{make_h(g, p, txi, bs[0], rho), make_h(g, p, txi, bs[1], rho)};
      auto br = bracket_formula(g, p, txi, bs[0], bs[1], rho);
      return std::pair{
          ibp_residual(phi, inc, hs, shigekawa_div<m>(hs, inc, [&](int, int) { return br; })),
          ibp_residual(phi, inc, hs, shigekawa_div<m>(hs, inc))};
    };
    std::vector<double> with(paths), without(paths);
    parallel_for(paths, threads, [&](std::size_t i, int) {
      auto pf = simulate(g, x0, grid, cfg.seed, i);
      auto [wf, nf] = residuals(grid, pf.increments);
      if (cfg.richardson) {
        Grid coarse(cfg.t, 2 * cfg.h);
        auto [wc, nc] = residuals(coarse, detail::coarsen<M>(pf.increments));
        wf = 2 * wf - wc;
        nf = 2 * nf - nc;
      }
      with[i] = wf;
      without[i] = nf;
    });
    std::string how = cfg.richardson ? ", step-halving extrapolation" : "";
    auto rw = detail::from_samples("ibp_manifold_brackets", 2, cfg, std::move(with));
    rows.push_back(rm.stat("ibp_manifold_brackets", rw, 0.0, "fields from the SDE with brackets" + how));
    if (!g.is_gradient()) {
      auto rn = detail::from_samples("ibp_manifold_no_brackets", 2, cfg, std::move(without));
      rows.push_back(rm.control("ibp_manifold_no_brackets", rn, "control: brackets dropped" + how));
    }
  }
  return rows;
}

template <Geometry M>
std::vector<CheckRow> suite_h2identity(const M& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  auto x0 = base_point(g, cfg);
  auto lam = ScalarSchedule::named(cfg.lambda, cfg.t);
  Grid coarse(cfg.t, cfg.h), fine(cfg.t, cfg.h / 2);
  const int n = cfg.samples;
  std::vector<double> rc(n), rf(n);
  parallel_for(n, threads, [&](std::size_t i, int) {
    auto residual = [&](const PathSample<M>& p) {
      auto st = build_stack(g, p, hspace_request());
      auto fr = damped_frames(g, p, st);
      return identity_check(g, p, fr, lam, detail::h2_vector(g, x0)).sup;
    };
    auto pf = simulate(g, x0, fine, cfg.seed, i);
    rf[i] = residual(pf);
    rc[i] = residual(simulate_increments(g, x0, coarse, detail::coarsen<M>(pf.increments)));
  }, 1);
  std::vector<CheckRow> rows;
  if (g.constant_curvature() == 0.0) {
    rows.push_back(rm.below("h2_identity_residual", 2, n, detail::max_abs(rc), cfg.tol.identity_flat,
                            "flat space, sup over the grid, max over paths"));
    return rows;
  }
  rows.push_back(rm.below("h2_identity_residual", 2, n, detail::max_abs(rc), cfg.tol.identity_curved,
                          "sup over the grid, max over paths"));
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (int i = 0; i < n; ++i) {
    double r = rc[i] / rf[i];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  auto low = rm.base("h2_identity_ratio_min", 2, n);
  low.value = lo;
  low.target = cfg.tol.ratio_min;
  low.provenance = "first order: residual(h) / residual(h/2)";
  low.pass = lo >= cfg.tol.ratio_min;
  low.rule = "value >= target";
  auto high = low;
  high.formula_id = "h2_identity_ratio_max";
  high.value = hi;
  high.target = cfg.tol.ratio_max;
  high.pass = hi <= cfg.tol.ratio_max;
  high.rule = "value <= target";
  rows.push_back(low);
  rows.push_back(high);
  return rows;
}

template <Geometry M>
std::vector<CheckRow> suite_h2divergence(const M& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  auto x0 = base_point(g, cfg);
  auto lam = ScalarSchedule::named(cfg.lambda, cfg.t);
  auto phi = config_form(g, cfg.form, 1, "form");
  auto v = detail::h2_vector(g, x0);
  Grid grid(cfg.t, cfg.h);
  // Evaluated at the horizon; the part of the divergence driven by later
  // noise has mean zero and is left out.
  auto residual = [&](const PathSample<M>& p, double& dz) {
    auto st = build_stack(g, p, hspace_request());
    auto fr = damped_frames(g, p, st);
    const int kt = p.grid.steps;
    auto z = z_field(p, fr, lam, v);
    auto div = z_divergence(g, p, fr, lam, v);
    const auto& x = p.points[kt];
    dz = phi.d(x, from_matrix(z.diagonal(kt)));
    return dz + phi(x, QVec<M>::vector(div[kt]));
  };
  std::vector<double> res(cfg.paths), dzs(cfg.paths);
  parallel_for(cfg.paths, threads, [&](std::size_t i, int) {
    auto pf = simulate(g, x0, grid, cfg.seed, i);
    double dz = 0;
    double r = residual(pf, dz);
    if (cfg.richardson) {
      double unused = 0;
      Grid coarse(cfg.t, 2 * cfg.h);
      r = 2 * r - residual(simulate_increments(g, x0, coarse, detail::coarsen<M>(pf.increments)), unused);
    }
    res[i] = r;
    dzs[i] = dz;
  });
  std::string how = cfg.richardson ? ", step-halving extrapolation" : "";
  std::vector<CheckRow> rows;
  rows.push_back(rm.stat("h2_divergence_ibp", detail::from_samples("h2_divergence_ibp", 1, cfg, std::move(res)),
                         0.0, "E dphi(Z_tt) + E phi(div Z_t)" + how));
  rows.push_back(rm.control("h2_divergence_dphi_term",
                            detail::from_samples("h2_divergence_dphi_term", 1, cfg, std::move(dzs)),
                            "control: E dphi(Z_tt) alone"));
  return rows;
}

inline std::vector<CheckRow> suite_liegroup(const SO3Left& g, const ExperimentConfig& cfg, int threads) {
  detail::RowMaker rm{cfg, g.name()};
  auto x0 = SO3Left::identity();
  auto f = config_form(g, cfg.function, 0, "function");
  auto phi = config_form(g, cfg.form, 1, "form");
  Grid grid(cfg.t, cfg.h);
  auto w = make_weights(ScalarSchedule::named(cfg.rho, cfg.t), grid);
  Vec3 v0 = detail::steepest(g, f, x0);
  auto bs = detail::frame_vectors(g, x0, 2);
  std::vector<Vec3> degenerate{bs[0], 2.5 * bs[0]};
  auto rs = run_kernels(g, x0,
                        {bismut_lie_group_kernel(f, {v0}, w),
                         bismut_lie_group_kernel(phi, bs, w),
                         direct_pullback_kernel<SO3Left>(exterior_derivative(phi), detail::wedge_of<SO3Left>(bs)),
                         bismut_lie_group_kernel(phi, degenerate, w),
                         bismut_flow_kernel<SO3Left>(phi, bs, w)},
                        detail::mc_of(cfg, threads));
  std::vector<CheckRow> rows;
  double target = std::exp(haar_eigenvalue(g, f) * cfg.t) * f.d(x0, QVec<SO3Left>::vector(v0));
  auto r0 = rm.stat("bismut_lie_group", rs[0], target, "Haar quadrature eigenvalue");
  double rel = std::abs(rs[0].value - target) / std::abs(target);
  r0.pass = r0.pass && rel < cfg.tol.lie_relative;
  r0.rule += " and relative < " + detail::RowMaker::num(cfg.tol.lie_relative);
  rows.push_back(r0);
  rows.push_back(rm.stat("bismut_lie_group-direct_pullback", paired_compare(rs[1], rs[2]), 0.0,
                         "paired difference, same paths"));
  rows.push_back(rm.exact("bismut_lie_group[degenerate]", 1, rs[3].n, detail::max_abs(rs[3].samples),
                          0.0, "b2 parallel to b1, max over paths"));
  double worst = 0;
  for (std::size_t i = 0; i < rs[1].samples.size(); ++i) {
    double a = rs[1].samples[i], b = rs[4].samples[i];
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
  }
  rows.push_back(rm.below("bismut_lie_group-bismut_flow", 1, rs[1].n, worst, cfg.tol.pathwise,
                          "same paths, max relative difference"));
  return rows;
}

/// Runs one resolved suite.  threads = 0 takes the environment default.
inline SuiteResult run_suite(const ExperimentConfig& raw, int threads = 0) {
  if (raw.suite == "all") {
    SuiteResult all;
    all.cfg = resolve(raw);
    all.digest = digest(all.cfg);
    for (const auto& name : suite_names()) {
      if (name == "all") continue;
      ExperimentConfig c = raw;
      c.suite = name;
      auto ok = supported_manifolds(name);
      bool keep = !raw.manifold.empty() && std::find(ok.begin(), ok.end(), raw.manifold) != ok.end();
      if (!keep) {
        c.manifold.clear();
        c.function.clear();
        c.form.clear();
        c.form2.clear();
        c.x0.reset();
      } else if (name == "liegroup") {
        c.form.clear();
      }
      auto part = run_suite(c, threads);
      all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    }
    return all;
  }
  SuiteResult out;
  out.cfg = resolve(raw);
  out.digest = digest(out.cfg);
  const auto& c = out.cfg;
  out.rows = with_manifold(c.manifold, [&](const auto& g) -> std::vector<CheckRow> {
    using M = std::decay_t<decltype(g)>;
    if (c.suite == "bismut_q0") return suite_bismut_q0(g, c, threads);
    if (c.suite == "bismut_q1") return suite_bismut_q1(g, c, threads);
    if (c.suite == "filtering") return suite_filtering(g, c, threads);
    if (c.suite == "bracket") return suite_bracket(g, c, threads);
    if (c.suite == "ibp") return suite_ibp(g, c, threads);
    if constexpr (M::kDim >= 2) {
      if (c.suite == "h2identity") return suite_h2identity(g, c, threads);
      if (c.suite == "h2divergence") return suite_h2divergence(g, c, threads);
    }
    if constexpr (std::is_same_v<M, SO3Left>)
      if (c.suite == "liegroup") return suite_liegroup(g, c, threads);
    throw ConfigError("suite " + c.suite + " does not run on " + c.manifold);
  });
  return out;
}

// Output.

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kCsvHeader =
    "formula_id,manifold,q,t,h,N,seed,value,stderr,target,target_provenance,pass";

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char ch : s) o += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return o + "\"";
}

inline void write_csv_row(std::ostream& os, const CheckRow& r) {
  os << csv_quote(r.formula_id) << ',' << r.manifold << ',' << r.q << ',' << fmt17(r.t) << ','
     << fmt17(r.h) << ',' << r.n << ',' << r.seed << ',' << fmt17(r.value) << ','
     << fmt17(r.std_error) << ',' << fmt17(r.target) << ',' << csv_quote(r.provenance) << ','
     << (r.pass ? "true" : "false") << '\n';
}

inline void write_csv(std::ostream& os, const SuiteResult& s) {
  os << kCsvHeader << '\n';
  for (const auto& r : s.rows) write_csv_row(os, r);
}

inline nlohmann::json row_json(const CheckRow& r, const SuiteResult& s) {
  nlohmann::json j;
  j["suite"] = r.suite;
  j["formula_id"] = r.formula_id;
  j["manifold"] = r.manifold;
  j["q"] = r.q;
  j["t"] = r.t;
  j["h"] = r.h;
  j["N"] = r.n;
  j["seed"] = r.seed;
  j["value"] = r.value;
  j["stderr"] = r.std_error;
  j["target"] = r.target;
  j["target_provenance"] = r.provenance;
  j["rule"] = r.rule;
  j["pass"] = r.pass;
  j["config_digest"] = hex64(s.digest);
  nlohmann::json ov = nlohmann::json::object();
  for (const auto& k : s.cfg.overridden) ov[k] = s.cfg.tol.at(k);
  j["tolerance_overrides"] = ov;
  return j;
}

inline void write_jsonl(std::ostream& os, const SuiteResult& s) {
  for (const auto& r : s.rows) os << row_json(r, s).dump() << '\n';
}

inline void write_summary(std::ostream& os, const SuiteResult& s) {
  char line[512];
  std::snprintf(line, sizeof line, "%-14s %-44s %-16s %2s %14s %12s %14s  %s\n", "suite", "check",
                "manifold", "q", "value", "stderr", "target", "result");
  os << line;
  for (const auto& r : s.rows) {
    std::snprintf(line, sizeof line, "%-14s %-44s %-16s %2d %14.6g %12.3g %14.6g  %s\n",
                  r.suite.c_str(), r.formula_id.c_str(), r.manifold.c_str(), r.q, r.value,
                  r.std_error, r.target, r.pass ? "pass" : "FAIL");
    os << line;
  }
  std::size_t failed = 0;
  for (const auto& r : s.rows) failed += !r.pass;
  os << s.rows.size() - failed << "/" << s.rows.size() << " checks passed, config digest "
     << hex64(s.digest) << '\n';
}

}  // namespace pathforms
