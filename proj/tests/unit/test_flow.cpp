#include "pathforms/flow.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace pathforms;
using namespace testutil;

namespace {

// Same geometry, but without the constant-curvature shortcut in the damped step.
template <class M>
struct GeneralCurvature : M {
  std::optional<double> constant_curvature() const { return std::nullopt; }
};

}  // namespace

template <class M>
class FlowTest : public ::testing::Test {};

using FlowManifolds =
    ::testing::Types<Sphere1, Sphere2, Sphere3, CliffordTorus, SO3Left, SO3Right, SO3Bi>;
TYPED_TEST_SUITE(FlowTest, FlowManifolds);

TYPED_TEST(FlowTest, PathsStayOnManifoldAndAreReproducible) {
  TypeParam g;
  std::mt19937_64 rng(31);
  auto x0 = random_point(g, rng);
  Grid grid(1.0, 1e-2);
  auto a = simulate(g, x0, grid, 5, 3);
  auto b = simulate(g, x0, grid, 5, 3);
  ASSERT_EQ(a.points.size(), 101u);
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    EXPECT_LT(g.constraint_violation(a.points[k]), 1e-13);
    EXPECT_EQ(a.points[k], b.points[k]);
  }
}

TYPED_TEST(FlowTest, DerivativeFlowMatchesFiniteDifferences) {
  TypeParam g;
  std::mt19937_64 rng(32);
  auto x0 = random_point(g, rng);
  auto v = random_tangent(g, x0, rng);
  Grid grid(0.5, 1e-2);
  auto base = simulate(g, x0, grid, 8, 1);
  auto txi = derivative_flow(g, base);
  const double eps = 1e-6;
  auto plus = simulate_increments(g, g.chart(x0, eps * v), grid, base.increments);
  auto minus = simulate_increments(g, g.chart(x0, -eps * v), grid, base.increments);
  for (int k : {1, 10, grid.steps}) {
    typename TypeParam::TVec fd =
        g.coords(base.points[k]) * (plus.points[k] - minus.points[k]) / (2 * eps);
    EXPECT_LT((fd - txi[k] * v).norm(), 1e-6 * (1 + v.norm())) << "k=" << k;
    // Output is tangent at x_k.
    auto w = txi[k] * v;
    EXPECT_LT((g.tangent_projector(base.points[k]) * w - w).norm(), 1e-12);
  }
}

TEST(Flow, LeftInvariantDerivativeFlowIsAdjointAction) {
  SO3Left g;
  std::mt19937_64 rng(33);
  auto x0 = random_point(g, rng);
  Grid grid(1.0, 1e-3);
  auto p = simulate(g, x0, grid, 2, 0);
  auto txi = derivative_flow(g, p);
  for (int k : {0, 500, 1000}) {
    Mat3 want = quat::rotation(quat::mul(quat::conj(x0), p.points[k])).transpose();
    EXPECT_LT((txi[k] - want).norm(), 1e-11);
  }
  SO3Right gr;
  auto pr = simulate(gr, x0, grid, 2, 0);
  auto txr = derivative_flow(gr, pr);
  EXPECT_LT((txr.back() - Mat3::Identity()).norm(), 1e-11);
}

// Two-sided system: x = g x0 h with h driven on the right by -B2/sqrt2; the
// derivative flow is Ad(h^-1) in body coordinates.
TEST(Flow, BiInvariantDerivativeFlowFactorises) {
  SO3Bi g;
  SO3Left left;
  std::mt19937_64 rng(34);
  auto x0 = random_point(g, rng);
  Grid grid(1.0, 1e-3);
  auto p = simulate(g, x0, grid, 4, 0);
  auto txi = derivative_flow(g, p);
  Vec4 h = SO3Left::identity();
  double worst = 0;
  for (int k = 0; k < grid.steps; ++k) {
    Vec3 e = -p.increments[k].tail<3>() / std::sqrt(2.0);
    h = heun_step(left, h, e, grid.h);
    worst = std::max(worst, (txi[k + 1] - quat::rotation(h).transpose()).norm());
  }
  EXPECT_LT(worst, 1e-2);
}

TYPED_TEST(FlowTest, DampedTransportShortcutMatchesMatrixExponential) {
  TypeParam g;
  GeneralCurvature<TypeParam> gg;
  std::mt19937_64 rng(35);
  auto x0 = random_point(g, rng);
  Grid grid(0.2, 1e-2);
  auto p = simulate(g, x0, grid, 6, 0);
  PathSample<GeneralCurvature<TypeParam>> pg;
  pg.grid = p.grid;
  pg.increments = p.increments;
  pg.points = p.points;
  for (int q = 0; q <= TypeParam::kDim; ++q)
    for (auto mode : {DampedMode::levi_civita, DampedMode::breve}) {
      auto a = damped_transport(g, p, q, mode);
      auto b = damped_transport(gg, pg, q, mode);
      EXPECT_LT((a.back() - b.back()).norm(), 1e-10) << "q=" << q;
    }
}

TEST(Flow, DampedTransportOnSphereDecaysAtRicciRate) {
  Sphere2 g;
  Vec3 x0(0.6, 0.0, 0.8);
  Grid grid(1.0, 1e-3);
  auto p = simulate(g, x0, grid, 1, 0);
  auto w1 = damped_transport(g, p, 1, DampedMode::levi_civita);
  auto w2 = damped_transport(g, p, 2, DampedMode::levi_civita);
  Vec3 v(-0.8, 0.0, 0.6);
  for (int k : {0, 250, 1000}) {
    EXPECT_NEAR((w1[k] * v).norm(), std::exp(-0.5 * k * grid.h), 1e-12);
    // Area form is parallel and the 2-form curvature vanishes: no damping.
    auto vol = primitive<3>({v, Vec3(x0.cross(v))});
    EXPECT_NEAR((w2[k] * vol.coeffs()).norm(), 1.0, 1e-12);
    // wedge^2 of the q = 1 transport decays at rate 1 instead.
    auto w11 = compound<3, 3>(Mat3(w1[k]), 2);
    EXPECT_NEAR((w11 * vol.coeffs()).norm(), std::exp(-1.0 * k * grid.h), 1e-12);
  }
}

TEST(Flow, DampedTransportComposesOnFlatTorus) {
  CliffordTorus g;
  auto x0 = CliffordTorus::from_angles(0.3, -1.1);
  Grid grid(0.5, 1e-2);
  auto p = simulate(g, x0, grid, 3, 0);
  auto w1 = damped_transport(g, p, 1, DampedMode::levi_civita);
  auto w2 = damped_transport(g, p, 2, DampedMode::levi_civita);
  EXPECT_LT((w2.back() - compound<4, 4>(Mat4(w1.back()), 2)).norm(), 1e-12);
}

TEST(Flow, DampedTransportRejectsExcessDegree) {
  Sphere2 g;
  Grid grid(0.1, 1e-2);
  auto p = simulate(g, Vec3(0, 0, 1), grid, 1, 0);
  EXPECT_THROW(damped_transport(g, p, 3, DampedMode::levi_civita), std::invalid_argument);
}

TEST(Flow, AntiDevelopmentHasIdentityCovariance) {
  Sphere2 g;
  Vec3 x0(0.0, 0.6, 0.8);
  Grid grid(0.5, 5e-3);
  Mat3 cov = Mat3::Zero();
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    auto p = simulate(g, x0, grid, 77, i);
    auto db = anti_development(g, p);
    for (const auto& d : db) {
      cov += d * d.transpose();
      EXPECT_LT(std::abs(d.dot(x0)), 1e-12);
    }
  }
  cov /= n * grid.steps * grid.h;
  EXPECT_LT((cov - g.tangent_projector(x0)).norm(), 0.03);
}

TEST(Flow, ItoIntegralValidatesLengths) {
  std::vector<Vec3> a(3, Vec3::Ones()), b(2, Vec3::Ones());
  EXPECT_THROW(ito_integral(a, b), std::invalid_argument);
  b.push_back(Vec3(1, 0, 0));
  EXPECT_DOUBLE_EQ(ito_integral(a, std::vector<Vec3>{Vec3::Ones(), Vec3::Ones(), Vec3(1, 0, 0)}), 7.0);
}

TEST(Flow, GridRejectsNonIntegerHorizon) {
  EXPECT_THROW(Grid(1.0, 0.3), std::invalid_argument);
  EXPECT_THROW(Grid(1.0, 0.0), std::invalid_argument);
  Grid g(1.0, 1e-3);
  EXPECT_EQ(g.steps, 1000);
  EXPECT_EQ(g.index_of(0.5), 500);
  EXPECT_THROW(g.index_of(0.50005), std::invalid_argument);
}

TEST(Flow, NonFiniteIncrementIsRejected) {
  Sphere2 g;
  Grid grid(0.02, 1e-2);
  std::vector<Vec3> inc{Vec3(std::nan(""), 0, 0), Vec3::Zero()};
  EXPECT_THROW(simulate_increments(g, Vec3(0, 0, 1), grid, inc), StepRejected);
}

// Weak error of E f(x_T) for f = x_3 on S^2 (exact value e^{-T} x_3(0)).
TEST(Flow, WeakErrorDecreasesWithStep) {
  Sphere2 g;
  Vec3 x0(0.6, 0.0, 0.8);
  const double horizon = 1.0, exact = std::exp(-1.0) * 0.8;
  auto bias = [&](double h) {
    Grid grid(horizon, h);
    const int n = 1000000;
    double s = 0;
    for (int i = 0; i < n; ++i) {
      NoiseDriver<3> drv(123, i, h, grid.steps);
      Vec3 x = x0;
      for (int k = 0; k < grid.steps; ++k) x = heun_step(g, x, drv.increment(k), h);
      s += x(2);
    }
    return s / n - exact;
  };
  double b1 = bias(0.1), b2 = bias(0.05);
  // Monte Carlo standard error is about 5e-4 here.
  EXPECT_GT(std::abs(b1), 1e-2);
  EXPECT_GT(std::abs(b1) / std::abs(b2), 1.5);
  EXPECT_LT(std::abs(b1) / std::abs(b2), 2.6);
}
