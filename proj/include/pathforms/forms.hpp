#pragma once

// Closed-form test functions and differential forms on the catalogue
// geometries.  A form is stored through its components in the tangent
// coordinate basis: phi(x)(V) = <coeff(x), V> for a q-vector V written in the
// lexicographic basis of wedge^q R^d.  Ambient forms on embedded manifolds are
// restrictions, so their exterior derivative is the ambient one.

#include "pathforms/manifold.hpp"
#include "pathforms/so3.hpp"
#include "pathforms/sphere.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pathforms {

template <Geometry M>
struct Form {
  using Point = typename M::Point;
  using Coeff = ExtVec<M::kTangent>;

  std::string name;
  int degree = 0;
  std::function<Coeff(const Point&)> coeff;
  std::function<Coeff(const Point&)> dcoeff;
  // Eigenvalue of half the Hodge Laplacian (sign: Delta = -(d delta + delta d)).
  std::optional<double> eigenvalue;

  double operator()(const Point& x, const QVec<M>& v) const {
    require(v.degree() == degree, "form " + name + ": expects a " + std::to_string(degree) +
                                      "-vector, got degree " + std::to_string(v.degree()));
    return coeff(x).dot(v.coeffs());
  }

  double d(const Point& x, const QVec<M>& v) const {
    require(v.degree() == degree + 1, "form " + name + ": exterior derivative expects a " +
                                          std::to_string(degree + 1) + "-vector");
    if (degree == M::kTangent) return 0.0;
    return dcoeff(x).dot(v.coeffs());
  }

  bool is_zero() const { return name == "zero"; }
};

namespace detail {

template <int D>
ExtVec<D> components(int q, std::initializer_list<std::pair<std::array<int, 3>, double>> terms) {
  ExtVec<D> c = ExtVec<D>::Zero(binomial(D, q));
  const auto& b = ext_basis(D, q);
  for (const auto& [idx, val] : terms) {
    unsigned mask = 0;
    for (int a = 0; a < q; ++a) mask |= 1u << idx[a];
    c(b.position[mask]) += val;
  }
  return c;
}

template <Geometry M>
Form<M> zero_form(int q) {
  Form<M> f;
  f.name = "zero";
  f.degree = q;
  f.coeff = [q](const typename M::Point&) {
    return ExtVec<M::kTangent>::Zero(binomial(M::kTangent, q)).eval();
  };
  f.dcoeff = [q](const typename M::Point&) {
    return ExtVec<M::kTangent>::Zero(binomial(M::kTangent, q + 1)).eval();
  };
  f.eigenvalue = 0.0;
  return f;
}

template <Geometry M>
Form<M> one_function() {
  Form<M> f;
  f.name = "one";
  f.coeff = [](const typename M::Point&) { return ExtVec<M::kTangent>::Ones(1).eval(); };
  f.dcoeff = [](const typename M::Point&) {
    return ExtVec<M::kTangent>::Zero(M::kTangent).eval();
  };
  f.eigenvalue = 0.0;
  return f;
}

// 1-form x_i dx_j - x_j dx_i; its derivative is 2 dx_i ^ dx_j.
template <Geometry M>
Form<M> rotation_form(const std::string& name, int i, int j, std::optional<double> eig) {
  constexpr int D = M::kTangent;
  Form<M> f;
  f.name = name;
  f.degree = 1;
  f.coeff = [i, j](const typename M::Point& x) {
    ExtVec<D> c = ExtVec<D>::Zero(D);
    c(j) = x(i);
    c(i) = -x(j);
    return c;
  };
  f.dcoeff = [i, j](const typename M::Point&) { return components<D>(2, {{{i, j, 0}, 2.0}}); };
  f.eigenvalue = eig;
  return f;
}

}  // namespace detail

template <int N>
std::vector<Form<Sphere<N>>> form_catalog(const Sphere<N>&) {
  using M = Sphere<N>;
  constexpr int D = N + 1;
  using C = ExtVec<D>;
  std::vector<Form<M>> out;
  out.push_back(detail::zero_form<M>(0));
  out.push_back(detail::one_function<M>());

  Form<M> first;
  first.name = "coord1";
  first.coeff = [](const Vec<D>& x) { return C::Constant(1, x(0)).eval(); };
  first.dcoeff = [](const Vec<D>&) { return C::Unit(D, 0).eval(); };
  first.eigenvalue = -0.5 * N;
  out.push_back(first);

  Form<M> height;
  height.name = "height";
  height.coeff = [](const Vec<D>& x) { return C::Constant(1, x(N)).eval(); };
  height.dcoeff = [](const Vec<D>&) { return C::Unit(D, N).eval(); };
  height.eigenvalue = -0.5 * N;
  out.push_back(height);

  Form<M> dheight;
  dheight.name = "dheight";
  dheight.degree = 1;
  dheight.coeff = [](const Vec<D>&) { return C::Unit(D, N).eval(); };
  dheight.dcoeff = [](const Vec<D>&) { return C::Zero(binomial(D, 2)).eval(); };
  dheight.eigenvalue = -0.5 * N;
  out.push_back(dheight);

  // Dual of a rotation field: harmonic on the circle, eigenvalue -Ric otherwise.
  out.push_back(detail::rotation_form<M>("rotation", 0, 1, -(N - 1.0)));

  if constexpr (N >= 2) {
    Form<M> mixed;
    mixed.name = "mixed";
    mixed.degree = 1;
    mixed.coeff = [](const Vec<D>& x) { return C(C::Unit(D, 0) * x(N)); };
    // d(x_N dx_0) = dx_N ^ dx_0 = -dx_0 ^ dx_N
    mixed.dcoeff = [](const Vec<D>&) { return detail::components<D>(2, {{{0, N, 0}, -1.0}}); };
    out.push_back(mixed);
  }

  if constexpr (N == 2) {
    auto area = [](const Vec3& x) {
      return detail::components<3>(2, {{{1, 2, 0}, x(0)}, {{0, 2, 0}, -x(1)}, {{0, 1, 0}, x(2)}});
    };
    Form<M> vol;
    vol.name = "area";
    vol.degree = 2;
    vol.coeff = area;
    vol.dcoeff = [](const Vec3&) { return C::Zero(1).eval(); };
    vol.eigenvalue = 0.0;
    out.push_back(vol);

    Form<M> hv;
    hv.name = "height_area";
    hv.degree = 2;
    hv.coeff = [area](const Vec3& x) { return C(x(2) * area(x)); };
    hv.dcoeff = [](const Vec3&) { return C::Zero(1).eval(); };
    hv.eigenvalue = -1.0;
    out.push_back(hv);
  }

  if constexpr (N == 3) {
    Form<M> h2;
    h2.name = "height_plane";
    h2.degree = 2;
    h2.coeff = [](const Vec4& x) { return detail::components<4>(2, {{{0, 1, 0}, x(3)}}); };
    // d(x_3 dx_0 ^ dx_1) = dx_3 ^ dx_0 ^ dx_1 = dx_0 ^ dx_1 ^ dx_3
    h2.dcoeff = [](const Vec4&) { return detail::components<4>(3, {{{0, 1, 3}, 1.0}}); };
    out.push_back(h2);
  }
  return out;
}

inline std::vector<Form<CliffordTorus>> form_catalog(const CliffordTorus&) {
  using M = CliffordTorus;
  using C = ExtVec<4>;
  std::vector<Form<M>> out;
  out.push_back(detail::zero_form<M>(0));
  out.push_back(detail::one_function<M>());

  Form<M> ca;
  ca.name = "cos_a";
  ca.coeff = [](const Vec4& x) { return C::Constant(1, x(0)).eval(); };
  ca.dcoeff = [](const Vec4&) { return C::Unit(4, 0).eval(); };
  ca.eigenvalue = -0.5;
  out.push_back(ca);

  Form<M> cab;
  cab.name = "cos_a_cos_b";
  cab.coeff = [](const Vec4& x) { return C::Constant(1, x(0) * x(2)).eval(); };
  cab.dcoeff = [](const Vec4& x) {
    C c = C::Zero(4);
    c(0) = x(2);
    c(2) = x(0);
    return c;
  };
  cab.eigenvalue = -1.0;
  out.push_back(cab);

  out.push_back(detail::rotation_form<M>("da", 0, 1, 0.0));
  out.push_back(detail::rotation_form<M>("db", 2, 3, 0.0));

  Form<M> cbda;
  cbda.name = "cos_b_da";
  cbda.degree = 1;
  cbda.coeff = [](const Vec4& x) {
    C c = C::Zero(4);
    c(0) = -x(1) * x(2);
    c(1) = x(0) * x(2);
    return c;
  };
  cbda.dcoeff = [](const Vec4& x) {
    return detail::components<4>(
        2, {{{0, 2, 0}, x(1)}, {{1, 2, 0}, -x(0)}, {{0, 1, 0}, 2.0 * x(2)}});
  };
  cbda.eigenvalue = -0.5;
  out.push_back(cbda);

  Form<M> dadb;
  dadb.name = "da_db";
  dadb.degree = 2;
  dadb.coeff = [](const Vec4& x) {
    return detail::components<4>(2, {{{0, 2, 0}, x(1) * x(3)},
                                     {{0, 3, 0}, -x(1) * x(2)},
                                     {{1, 2, 0}, -x(0) * x(3)},
                                     {{1, 3, 0}, x(0) * x(2)}});
  };
  dadb.dcoeff = [](const Vec4&) { return C::Zero(4).eval(); };
  dadb.eigenvalue = 0.0;
  out.push_back(dadb);
  return out;
}

namespace detail {

// Matrix coefficient R_01 of the rotation and its body-coordinate gradient.
inline double g12(const Vec4& q) { return quat::rotation(q)(0, 1); }

inline Vec3 g12_grad(const Vec4& q) {
  Mat3 r = quat::rotation(q);
  Vec3 g;
  for (int k = 0; k < 3; ++k) g(k) = (r * hat(Vec3::Unit(k)))(0, 1);
  return g;
}

// d theta^k (u, v) = -(u x v)_k in the basis (01, 02, 12).
inline ExtVec<3> dtheta(int k) {
  ExtVec<3> c = ExtVec<3>::Zero(3);
  if (k == 0) c(2) = -1.0;
  if (k == 1) c(1) = 1.0;
  if (k == 2) c(0) = -1.0;
  return c;
}

}  // namespace detail

template <SO3Kind Kind>
std::vector<Form<SO3<Kind>>> form_catalog(const SO3<Kind>&) {
  using M = SO3<Kind>;
  using C = ExtVec<3>;
  std::vector<Form<M>> out;
  out.push_back(detail::zero_form<M>(0));
  out.push_back(detail::one_function<M>());

  Form<M> f;
  f.name = "g12";
  f.coeff = [](const Vec4& q) { return C::Constant(1, detail::g12(q)).eval(); };
  f.dcoeff = [](const Vec4& q) { return C(detail::g12_grad(q)); };
  f.eigenvalue = -1.0;
  out.push_back(f);

  // Left-invariant coframe; duals of Killing fields, eigenvalue -Ric.
  for (int k = 0; k < 3; ++k) {
    Form<M> th;
    th.name = "theta" + std::to_string(k + 1);
    th.degree = 1;
    th.coeff = [k](const Vec4&) { return C::Unit(3, k).eval(); };
    th.dcoeff = [k](const Vec4&) { return detail::dtheta(k); };
    th.eigenvalue = -0.5;
    out.push_back(th);
  }

  Form<M> df;
  df.name = "dg12";
  df.degree = 1;
  df.coeff = [](const Vec4& q) { return C(detail::g12_grad(q)); };
  df.dcoeff = [](const Vec4&) { return C::Zero(3).eval(); };
  df.eigenvalue = -1.0;
  out.push_back(df);

  Form<M> ft;
  ft.name = "g12_theta3";
  ft.degree = 1;
  ft.coeff = [](const Vec4& q) { return C(detail::g12(q) * C::Unit(3, 2)); };
  ft.dcoeff = [](const Vec4& q) {
    Vec3 a = detail::g12_grad(q);
    C c = detail::g12(q) * detail::dtheta(2);
    c(1) += a(0);
    c(2) += a(1);
    return c;
  };
  out.push_back(ft);

  Form<M> t12;
  t12.name = "theta12";
  t12.degree = 2;
  t12.coeff = [](const Vec4&) { return C::Unit(3, 0).eval(); };
  t12.dcoeff = [](const Vec4&) { return C::Zero(1).eval(); };
  out.push_back(t12);

  Form<M> ft12;
  ft12.name = "g12_theta12";
  ft12.degree = 2;
  ft12.coeff = [](const Vec4& q) { return C(detail::g12(q) * C::Unit(3, 0)); };
  ft12.dcoeff = [](const Vec4& q) { return C::Constant(1, detail::g12_grad(q)(2)).eval(); };
  out.push_back(ft12);
  return out;
}

/// Eigenvalue of half the Laplacian for a function on SO(3), as minus half the
/// Rayleigh quotient int |grad f|^2 / int f^2 under Haar measure.  Midpoint
/// quadrature in ZYZ Euler angles with n nodes per angle.
template <SO3Kind Kind>
double haar_eigenvalue(const SO3<Kind>&, const Form<SO3<Kind>>& f, int n = 48) {
  require(f.degree == 0, "haar_eigenvalue: needs a function");
  require(n >= 4, "haar_eigenvalue: too few nodes");
  const double pi = std::acos(-1.0);
  auto zq = [](double a) { return Vec4(std::cos(0.5 * a), 0, 0, std::sin(0.5 * a)); };
  auto yq = [](double b) { return Vec4(std::cos(0.5 * b), 0, std::sin(0.5 * b), 0); };
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    double a = 2 * pi * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      double b = pi * (j + 0.5) / n, w = std::sin(b);
      Vec4 ab = quat::mul(zq(a), yq(b));
      for (int k = 0; k < n; ++k) {
        Vec4 q = quat::mul(ab, zq(2 * pi * (k + 0.5) / n));
        double v = f.coeff(q)(0);
        num += w * f.dcoeff(q).squaredNorm();
        den += w * v * v;
      }
    }
  }
  require(den > 0, "haar_eigenvalue: function vanishes identically");
  return -0.5 * num / den;
}

template <Geometry M>
std::vector<std::string> form_names(const M& g) {
  std::vector<std::string> names;
  for (const auto& f : form_catalog(g)) names.push_back(f.name);
  return names;
}

template <Geometry M>
Form<M> find_form(const M& g, const std::string& name) {
  std::string valid;
  for (auto& f : form_catalog(g)) {
    if (f.name == name) return f;
    valid += (valid.empty() ? "" : ", ") + f.name;
  }
  throw std::invalid_argument("unknown form '" + name + "' on " + g.name() + " (valid: " + valid +
                              ")");
}

/// d phi as a form of its own (its derivative vanishes).
template <Geometry M>
Form<M> exterior_derivative(const Form<M>& f) {
  require(f.degree < M::kTangent, "exterior_derivative: form " + f.name + " has top degree");
  Form<M> out;
  out.name = "d" + f.name;
  out.degree = f.degree + 1;
  out.coeff = f.dcoeff;
  const int q = out.degree;
  out.dcoeff = [q](const typename M::Point&) {
    return ExtVec<M::kTangent>::Zero(binomial(M::kTangent, std::min(q + 1, M::kTangent))).eval();
  };
  out.eigenvalue = f.eigenvalue;
  return out;
}

/// Zero form of any degree (the catalogue only lists degree 0).
template <Geometry M>
Form<M> zero_form(int q) {
  require(q >= 0 && q <= M::kDim, "zero_form: bad degree");
  return detail::zero_form<M>(q);
}

}  // namespace pathforms
