#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pathforms;
using namespace testutil;

template <class M>
class ManifoldTest : public ::testing::Test {};

using AllManifolds =
    ::testing::Types<Sphere1, Sphere2, Sphere3, CliffordTorus, SO3Left, SO3Right, SO3Bi>;
TYPED_TEST_SUITE(ManifoldTest, AllManifolds);

TYPED_TEST(ManifoldTest, NoiseMapsAreAdjointAndSpanTheTangentSpace) {
  TypeParam g;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_point(g, rng);
    auto xm = g.x_map(x);
    auto ym = g.y_map(x);
    auto p = g.tangent_projector(x);
    EXPECT_LT((xm * xm.transpose() - p).norm(), 1e-12);
    EXPECT_LT((ym - xm.transpose()).norm(), 1e-15);
    EXPECT_LT((xm * ym - p).norm(), 1e-12);
    auto f = g.frame(x);
    EXPECT_LT((f.transpose() * f - decltype(f.transpose() * f)::Identity()).norm(), 1e-12);
    EXPECT_LT((f * f.transpose() - p).norm(), 1e-12);
    auto nf = g.normal_frame(x);
    if (nf.cols() > 0) EXPECT_LT((f.transpose() * nf).norm(), 1e-12);
  }
}

TYPED_TEST(ManifoldTest, VelocityAgreesWithNoiseMapAndJacobian) {
  TypeParam g;
  std::mt19937_64 rng(12);
  auto x = random_point(g, rng);
  auto e = gaussian<TypeParam::kNoise>(rng);
  EXPECT_LT((g.coords(x) * g.velocity(x, e, 0.0) - g.x_map(x) * e).norm(), 1e-12);
  // Jacobians against central differences in the ambient space.
  auto d = gaussian<TypeParam::kAmbient>(rng);
  const double eps = 1e-6;
  typename TypeParam::Point fd_vel = (g.velocity(x + eps * d, e, 0.0) - g.velocity(x - eps * d, e, 0.0)) / (2 * eps);
  EXPECT_LT((fd_vel - g.velocity_jacobian(x, e, 0.0) * d).norm(), 1e-8);
  typename TypeParam::Point y = 1.3 * x;
  typename TypeParam::Point fd_proj = (g.project(y + eps * d) - g.project(y - eps * d)) / (2 * eps);
  EXPECT_LT((fd_proj - g.project_jacobian(y) * d).norm(), 1e-8);
  EXPECT_LT(g.constraint_violation(g.project(y)), 1e-14);
}

TYPED_TEST(ManifoldTest, EmbedAndCoordsAreInverse) {
  TypeParam g;
  std::mt19937_64 rng(13);
  auto x = random_point(g, rng);
  auto v = random_tangent(g, x, rng);
  EXPECT_LT((g.coords(x) * (g.embed(x) * v) - v).norm(), 1e-13);
  // The chart is tangent to v at 0.
  auto vel = curve_velocity(g, [&](double s) { return g.chart(x, s * v); });
  EXPECT_LT((vel - v).norm(), 1e-8);
  EXPECT_LT((g.chart(x, 0 * v) - x).norm(), 1e-15);
}

TYPED_TEST(ManifoldTest, TorsionIsXOfDY) {
  TypeParam g;
  std::mt19937_64 rng(14);
  auto x = random_point(g, rng);
  auto u = random_tangent(g, x, rng), v = random_tangent(g, x, rng);
  EXPECT_LT((g.x_map(x) * g.dy(x, u, v) - g.torsion(x, u, v)).norm(), 1e-12);
  EXPECT_LT((g.torsion(x, u, v) + g.torsion(x, v, u)).norm(), 1e-12);
}

TYPED_TEST(ManifoldTest, TransportStepIsIsometricAndTangent) {
  TypeParam g;
  std::mt19937_64 rng(15);
  auto x = random_point(g, rng);
  auto y = g.chart(x, 0.3 * random_tangent(g, x, rng));
  for (Connection c : {Connection::levi_civita, Connection::lejan_watanabe, Connection::adjoint}) {
    auto t = g.transport_step(x, y, c);
    auto f = g.frame(x);
    auto tf = t * f;
    EXPECT_LT((tf.transpose() * tf - decltype(f.transpose() * f)::Identity()).norm(), 1e-12);
    EXPECT_LT((g.tangent_projector(y) * tf - tf).norm(), 1e-12);
  }
}

// Over a short step the connection of the system moves Y(x)u to X(y) Y(x) u.
TYPED_TEST(ManifoldTest, LeJanWatanabeTransportKeepsYConstant) {
  TypeParam g;
  std::mt19937_64 rng(16);
  auto x = random_point(g, rng);
  auto u = random_tangent(g, x, rng);
  for (double delta : {1e-2, 5e-3}) {
    typename TypeParam::TVec dir = random_tangent(g, x, rng).normalized();
    auto y = g.chart(x, delta * dir);
    typename TypeParam::TVec want = g.x_map(y) * (g.y_map(x) * u);
    typename TypeParam::TVec got = g.transport_step(x, y, Connection::lejan_watanabe) * u;
    EXPECT_LT((got - want).norm(), 4 * delta * delta * u.norm());
  }
}

namespace {

// Second fundamental form from finite differences of the tangent projector.
template <Geometry M>
typename M::TVec second_fundamental(const M& g, const typename M::Point& x,
                                    const typename M::TVec& u, const typename M::TVec& v) {
  const double eps = 1e-5;
  TMat<M> dp = (g.tangent_projector(g.chart(x, eps * u)) - g.tangent_projector(g.chart(x, -eps * u))) /
            (2 * eps);
  typename M::TVec w = dp * v;
  return w - g.tangent_projector(x) * w;
}

template <Geometry M>
double riemann_gauss(const M& g, const typename M::Point& x, const typename M::TVec& a,
                     const typename M::TVec& b, const typename M::TVec& c,
                     const typename M::TVec& d) {
  return second_fundamental(g, x, a, d).dot(second_fundamental(g, x, b, c)) -
         second_fundamental(g, x, a, c).dot(second_fundamental(g, x, b, d));
}

}  // namespace

TYPED_TEST(ManifoldTest, CurvatureMatchesIndependentOracle) {
  TypeParam g;
  std::mt19937_64 rng(17);
  constexpr int n = TypeParam::kDim;
  constexpr int d = TypeParam::kTangent;
  auto x = random_point(g, rng);
  auto f = g.frame(x);
  Eigen::MatrixXd ric(n, n), rop(binomial(n, 2), binomial(n, 2));
  constexpr bool lie = TypeParam::kAmbient != TypeParam::kTangent;
  auto col = [&](int i) { return typename TypeParam::TVec(f.col(i)); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < n; ++k) {
        if constexpr (lie) {
          // bi-invariant metric: Ric(u,w) = 1/4 sum <[u,e_k],[w,e_k]>
          Vec3 a = Vec3(col(i)).cross(Vec3(col(k))), b = Vec3(col(j)).cross(Vec3(col(k)));
          s += 0.25 * a.dot(b);
        } else {
          s += riemann_gauss(g, x, col(i), col(k), col(k), col(j));
        }
      }
      ric(i, j) = s;
    }
  Eigen::MatrixXd ric_impl = f.transpose() * Mat<d, d>(g.ricci(x)) * f;
  EXPECT_LT((ric - ric_impl).norm(), 1e-6);

  if constexpr (n >= 2) {
    const auto& b2 = detail::ext_basis(n, 2);
    for (std::size_t p = 0; p < b2.masks.size(); ++p)
      for (std::size_t r = 0; r < b2.masks.size(); ++r) {
        auto i = b2.indices[p][0], j = b2.indices[p][1];
        auto k = b2.indices[r][0], l = b2.indices[r][1];
        if constexpr (lie) {
          rop(p, r) = 0.25 * Vec3(col(i)).cross(Vec3(col(j))).dot(Vec3(col(k)).cross(Vec3(col(l))));
        } else {
          rop(p, r) = riemann_gauss(g, x, col(i), col(j), col(l), col(k));
        }
      }
    auto ef = ext_frame(g, x, 2);
    Eigen::MatrixXd rop_impl = ef.transpose() * g.curvature_operator(x) * ef;
    EXPECT_LT((rop - rop_impl).norm(), 1e-6);
  }
}

TYPED_TEST(ManifoldTest, WeitzenbockIsConstantOnSpaceForms) {
  TypeParam g;
  std::mt19937_64 rng(18);
  auto x = random_point(g, rng);
  double k = *g.constant_curvature();
  constexpr int n = TypeParam::kDim;
  for (int q = 0; q <= n; ++q) {
    auto ef = ext_frame(g, x, q);
    Eigen::MatrixXd w = ef.transpose() * weitzenbock(g, x, q) * ef;
    Eigen::MatrixXd want = q * (n - q) * k * Eigen::MatrixXd::Identity(w.rows(), w.cols());
    EXPECT_LT((w - want).norm(), 1e-12) << "q=" << q;
  }
  EXPECT_THROW(weitzenbock(g, x, n + 1), std::invalid_argument);
}

// Holonomy around a small geodesic circle rotates by K * enclosed area.
TYPED_TEST(ManifoldTest, HolonomyOfSmallLoop) {
  TypeParam g;
  if constexpr (TypeParam::kDim >= 2) {
    std::mt19937_64 rng(19);
    auto x = random_point(g, rng);
    auto f = g.frame(x);
    typename TypeParam::TVec e1 = f.col(0), e2 = f.col(1);
    const double delta = 0.02;
    const int steps = 4000;
    typename TypeParam::TVec v = e1;
    typename TypeParam::Point prev = x;
    // Circle of radius delta through x, counter-clockwise in the (e1, e2) plane.
    for (int i = 1; i <= steps; ++i) {
      double th = 2 * std::numbers::pi * i / steps;
      typename TypeParam::TVec off = delta * ((std::cos(th) - 1) * e1 + std::sin(th) * e2);
      auto next = i == steps ? x : g.chart(x, off);
      v = g.transport_step(prev, next, Connection::levi_civita) * v;
      prev = next;
    }
    double angle = std::atan2(v.dot(e2), v.dot(e1));
    double area = std::numbers::pi * delta * delta;
    double k = *g.constant_curvature();
    EXPECT_NEAR(angle / area, k, 0.01 * std::max(k, 0.05));
  }
}

TEST(SO3, DYMatchesFiniteDifferenceOfLeftInvariantFields) {
  std::mt19937_64 rng(20);
  auto check = [&](auto g) {
    using M = decltype(g);
    auto q = random_point(g, rng);
    Vec3 u = gaussian<3>(rng), v = gaussian<3>(rng);
    const double eps = 1e-5;
    auto deriv = [&](const Vec3& dir, const Vec3& field) -> typename M::Noise {
      return (g.y_map(g.chart(q, eps * dir)) * field - g.y_map(g.chart(q, -eps * dir)) * field) /
             (2 * eps);
    };
    typename M::Noise want = deriv(u, v) - deriv(v, u) - g.y_map(q) * u.cross(v);
    EXPECT_LT((g.dy(q, u, v) - want).norm(), 1e-8) << g.name();
  };
  check(SO3Left{});
  check(SO3Right{});
  check(SO3Bi{});
}

TEST(SO3, TorsionIsBracketUpToSign) {
  Vec3 u(1, 0, 0), v(0, 1, 0);
  Vec4 q = SO3Left::identity();
  EXPECT_LT((SO3Left{}.torsion(q, u, v) + Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_LT((SO3Right{}.torsion(q, u, v) - Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_LT(SO3Bi{}.torsion(q, u, v).norm(), 1e-15);
}

TEST(SO3, DriftOnlyForLeftSystem) {
  EXPECT_NO_THROW(SO3Left(Vec3(0.1, 0, 0)));
  EXPECT_THROW(SO3Right(Vec3(0.1, 0, 0)), std::invalid_argument);
}

TEST(Manifolds, YMapRejectsNonTangentInput) {
  Sphere2 g;
  Vec3 x(0, 0, 1);
  EXPECT_THROW(apply_y(g, x, Vec3(0, 0, 1)), std::invalid_argument);
  EXPECT_NO_THROW(apply_y(g, x, Vec3(1, 0, 0)));
}

TEST(Manifolds, AntipodalTransportIsRejected) {
  Sphere2 g;
  EXPECT_THROW(g.transport_step(Vec3(0, 0, 1), Vec3(0, 0, -1), Connection::levi_civita),
               std::domain_error);
}
