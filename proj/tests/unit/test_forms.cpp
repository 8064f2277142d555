#include "pathforms/forms.hpp"
#include "pathforms/schedule.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <set>

using namespace pathforms;
using namespace testutil;

namespace {

// Exterior derivative of phi in the chart a -> chart(x, sum a_i e_i), evaluated
// on e_{j_0} ^ ... ^ e_{j_q} at a = 0.  Coordinate fields are differenced from
// the chart; the outer derivative is a central difference.
template <Geometry M>
double fd_exterior_derivative(const M& g, const Form<M>& phi, const typename M::Point& x,
                              const std::vector<int>& js) {
  auto frame = g.frame(x);
  const int q = phi.degree;
  auto point = [&](const Vec<M::kDim>& a) {
    return g.chart(x, typename M::TVec(frame * a));
  };
  // phi on the coordinate fields listed in idx at chart coordinate a.
  auto coord_value = [&](const Vec<M::kDim>& a, const std::vector<int>& idx) {
    const double inner = 1e-6;
    typename M::Point y = point(a);
    std::vector<typename M::TVec> fields;
    for (int i : idx) {
      Vec<M::kDim> da = Vec<M::kDim>::Zero();
      da(i) = inner;
      typename M::Point d = (point(a + da) - point(a - da)) / (2 * inner);
      fields.push_back(g.coords(y) * d);
    }
    QVec<M> v = q == 0 ? QVec<M>::scalar(1.0)
                       : primitive<M::kTangent>(std::span<const typename M::TVec>(fields));
    return phi(y, v);
  };
  const double outer = 1e-4;
  double total = 0;
  for (int l = 0; l <= q; ++l) {
    std::vector<int> rest;
    for (int m = 0; m <= q; ++m)
      if (m != l) rest.push_back(js[m]);
    Vec<M::kDim> da = Vec<M::kDim>::Zero();
    da(js[l]) = outer;
    double deriv = (coord_value(da, rest) - coord_value(-da, rest)) / (2 * outer);
    total += (l % 2 ? -1.0 : 1.0) * deriv;
  }
  return total;
}

std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.push_back(i);
    out.push_back(s);
  }
  return out;
}

template <Geometry M>
Form<M> derivative_as_form(const Form<M>& f) {
  Form<M> d;
  d.name = "d" + f.name;
  d.degree = f.degree + 1;
  d.coeff = f.dcoeff;
  int q = d.degree;
  d.dcoeff = [q](const typename M::Point&) {
    return ExtVec<M::kTangent>::Zero(binomial(M::kTangent, q + 1)).eval();
  };
  return d;
}

}  // namespace

template <class M>
class FormTest : public ::testing::Test {};

using FormManifolds =
    ::testing::Types<Sphere1, Sphere2, Sphere3, CliffordTorus, SO3Left, SO3Right, SO3Bi>;
TYPED_TEST_SUITE(FormTest, FormManifolds);

TYPED_TEST(FormTest, CatalogueIsNonEmptyWithUniqueNames) {
  TypeParam g;
  auto names = form_names(g);
  EXPECT_GE(names.size(), 3u);
  std::set<std::string> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), names.size());
  for (const auto& f : form_catalog(g)) {
    EXPECT_GE(f.degree, 0);
    EXPECT_LE(f.degree, TypeParam::kDim);
  }
}

TYPED_TEST(FormTest, ExteriorDerivativeMatchesChartDifferences) {
  TypeParam g;
  std::mt19937_64 rng(41);
  for (const auto& f : form_catalog(g)) {
    if (f.degree >= TypeParam::kDim) continue;
    for (int trial = 0; trial < 3; ++trial) {
      auto x = random_point(g, rng);
      auto frame = g.frame(x);
      for (const auto& js : subsets(TypeParam::kDim, f.degree + 1)) {
        std::vector<typename TypeParam::TVec> es;
        for (int j : js) es.push_back(frame.col(j));
        auto v = primitive<TypeParam::kTangent>(std::span<const typename TypeParam::TVec>(es));
        double want = fd_exterior_derivative(g, f, x, js);
        EXPECT_NEAR(f.d(x, v), want, 1e-6) << f.name;
      }
    }
  }
}

TYPED_TEST(FormTest, DerivativeIsClosed) {
  TypeParam g;
  std::mt19937_64 rng(42);
  for (const auto& f : form_catalog(g)) {
    if (f.degree + 1 >= TypeParam::kDim) continue;
    auto df = derivative_as_form(f);
    auto x = random_point(g, rng);
    for (const auto& js : subsets(TypeParam::kDim, df.degree + 1))
      EXPECT_NEAR(fd_exterior_derivative(g, df, x, js), 0.0, 1e-6) << f.name;
  }
}

// Half the Laplacian of a function by second differences along geodesics.
TYPED_TEST(FormTest, FunctionEigenvaluesMatchSecondDifferences) {
  TypeParam g;
  std::mt19937_64 rng(43);
  const double eps = 1e-3;
  for (const auto& f : form_catalog(g)) {
    if (f.degree != 0 || !f.eigenvalue) continue;
    for (int trial = 0; trial < 5; ++trial) {
      auto x = random_point(g, rng);
      auto frame = g.frame(x);
      auto val = [&](const typename TypeParam::Point& y) { return f.coeff(y)(0); };
      double lap = 0;
      for (int i = 0; i < TypeParam::kDim; ++i) {
        typename TypeParam::TVec e = frame.col(i);
        lap += (val(g.chart(x, eps * e)) + val(g.chart(x, -eps * e)) - 2 * val(x)) / (eps * eps);
      }
      EXPECT_NEAR(0.5 * lap, *f.eigenvalue * val(x), 1e-5) << f.name;
    }
  }
}

TEST(Forms, HaarQuadratureRecoversMatrixCoefficientEigenvalue) {
  SO3Bi g;
  auto f = find_form(g, "g12");
  EXPECT_NEAR(haar_eigenvalue(g, f, 32), -1.0, 1e-3);
  auto one = find_form(g, "one");
  EXPECT_NEAR(haar_eigenvalue(g, one, 8), 0.0, 1e-15);
}

TEST(Forms, SphereFormsHaveExpectedValues) {
  Sphere2 g;
  Vec3 pole(0, 0, 1);
  auto h = find_form(g, "height");
  EXPECT_DOUBLE_EQ(h(pole, QVec<Sphere2>::scalar(2.0)), 2.0);
  auto area = find_form(g, "area");
  // Area form on e1 ^ e2 at the north pole is 1.
  EXPECT_NEAR(area(pole, primitive<3>({Vec3(1, 0, 0), Vec3(0, 1, 0)})), 1.0, 1e-15);
  Vec3 x = Vec3(0.3, -0.4, 0.5).normalized();
  Vec3 u = g.tangent_projector(x) * Vec3(1, 2, 0);
  Vec3 v = x.cross(u);
  // Oriented by the outward normal: omega(u, x cross u) = |u|^2.
  EXPECT_NEAR(area(x, primitive<3>({u, v})), u.squaredNorm(), 1e-12);
  auto rot = find_form(g, "rotation");
  EXPECT_NEAR(rot.d(x, primitive<3>({u, v})), 2 * (u(0) * v(1) - u(1) * v(0)), 1e-14);
}

TEST(Forms, UnknownNameListsCatalogue) {
  Sphere2 g;
  try {
    find_form(g, "nope");
    FAIL();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("height"), std::string::npos);
    EXPECT_NE(msg.find("area"), std::string::npos);
  }
}

TEST(Forms, DegreeMismatchIsRejected) {
  Sphere2 g;
  auto f = find_form(g, "rotation");
  EXPECT_THROW(f(Vec3(0, 0, 1), QVec<Sphere2>::scalar(1)), std::invalid_argument);
  EXPECT_THROW(f.d(Vec3(0, 0, 1), QVec<Sphere2>::vector(Vec3(1, 0, 0))), std::invalid_argument);
  auto z = zero_form<Sphere2>(2);
  EXPECT_EQ(z(Vec3(0, 0, 1), primitive<3>({Vec3(1, 0, 0), Vec3(0, 1, 0)})), 0.0);
}

TEST(Schedule, IntegralsMatchQuadrature) {
  const double horizon = 0.8;
  for (auto s : {ScalarSchedule::constant(2.0), ScalarSchedule::power(1.0),
                 ScalarSchedule::power(2.5), ScalarSchedule::sine(horizon)}) {
    const int n = 20000;
    double sum = 0, dh = horizon / n;
    for (int k = 0; k < n; ++k) sum += s.value((k + 0.5) * dh) * dh;
    EXPECT_NEAR(s.integral(horizon), sum, 1e-8);
    double t = 0.37, e = 1e-6;
    EXPECT_NEAR(s.derivative(t), (s.value(t + e) - s.value(t - e)) / (2 * e), 1e-6);
  }
  auto sine = ScalarSchedule::sine(horizon);
  EXPECT_NEAR(sine.value(0), 0.0, 1e-15);
  EXPECT_NEAR(sine.value(horizon), 1.0, 1e-15);
}

TEST(Schedule, GridAndNames) {
  auto gsch = ScalarSchedule::grid({1.0, 2.0, 3.0}, 0.5);
  EXPECT_DOUBLE_EQ(gsch.value(0.75), 2.0);
  EXPECT_DOUBLE_EQ(gsch.integral(1.25), 0.5 + 1.0 + 0.75);
  EXPECT_DOUBLE_EQ(ScalarSchedule::named("linear", 1).value(0.3), 0.3);
  EXPECT_THROW(ScalarSchedule::named("cubic", 1), std::invalid_argument);
}
