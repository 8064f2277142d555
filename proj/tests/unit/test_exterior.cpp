#include "pathforms/exterior.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace pathforms;

namespace {

template <int D>
Vec<D> random_vec(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec<D> v;
  for (int i = 0; i < D; ++i) v(i) = n(rng);
  return v;
}

template <int D>
Mat<D, D> random_mat(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat<D, D> m;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = n(rng);
  return m;
}

// Leibniz determinant of the q x q matrix [vs[b](rows[a])].
template <int D>
double leibniz(const std::vector<Vec<D>>& vs, const std::vector<int>& rows) {
  int q = static_cast<int>(vs.size());
  std::vector<int> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0;
  do {
    int inv = 0;
    for (int i = 0; i < q; ++i)
      for (int j = i + 1; j < q; ++j) inv += perm[i] > perm[j];
    double term = (inv % 2) ? -1.0 : 1.0;
    for (int a = 0; a < q; ++a) term *= vs[perm[a]](rows[a]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

template <int D>
MultiVector<D> random_multivector(std::mt19937_64& rng, int q) {
  std::normal_distribution<double> n;
  MultiVector<D> v(q);
  for (int i = 0; i < v.size(); ++i) v.coeffs()(i) = n(rng);
  return v;
}

}  // namespace

TEST(Exterior, BasisIsLexicographic) {
  const auto& b = detail::ext_basis(4, 2);
  std::vector<std::pair<int, int>> got;
  for (const auto& idx : b.indices) got.emplace_back(idx[0], idx[1]);
  std::vector<std::pair<int, int>> want{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  EXPECT_EQ(got, want);
}

TEST(Exterior, PrimitiveComponentsAreMinors) {
  std::mt19937_64 rng(1);
  for (int q = 1; q <= 4; ++q) {
    std::vector<Vec<4>> vs;
    for (int i = 0; i < q; ++i) vs.push_back(random_vec<4>(rng));
    auto v = primitive<4>(std::span<const Vec<4>>(vs));
    const auto& b = detail::ext_basis(4, q);
    for (int i = 0; i < v.size(); ++i) {
      std::vector<int> rows(b.indices[i].begin(), b.indices[i].begin() + q);
      EXPECT_NEAR(v[i], leibniz<4>(vs, rows), 1e-12);
    }
  }
}

TEST(Exterior, WedgeIsAssociativeAndGradedCommutative) {
  std::mt19937_64 rng(2);
  auto a = random_multivector<4>(rng, 1);
  auto b = random_multivector<4>(rng, 2);
  auto c = random_multivector<4>(rng, 1);
  auto l = wedge(wedge(a, b), c);
  auto r = wedge(a, wedge(b, c));
  EXPECT_LT((l - r).norm(), 1e-12);
  // a ^ b = (-1)^{pq} b ^ a
  EXPECT_LT((wedge(a, b) - wedge(b, a)).norm(), 1e-12);
  EXPECT_LT((wedge(a, c) + wedge(c, a)).norm(), 1e-12);
  EXPECT_LT(wedge(a, a).norm(), 1e-15);
}

TEST(Exterior, WedgeRejectsOverflow) {
  auto a = MultiVector<3>(2);
  EXPECT_THROW(wedge(a, a), std::invalid_argument);
  EXPECT_THROW(MultiVector<3>(4), std::invalid_argument);
}

TEST(Exterior, CompoundIsMultiplicativeAndPushesPrimitives) {
  std::mt19937_64 rng(3);
  Mat4 a = random_mat<4>(rng), b = random_mat<4>(rng);
  for (int q = 0; q <= 4; ++q) {
    ExtMat<4> lhs = compound<4, 4>(Mat4(a * b), q);
    ExtMat<4> rhs = compound<4, 4>(a, q) * compound<4, 4>(b, q);
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * (1 + lhs.norm()));
  }
  std::vector<Vec<4>> vs{random_vec<4>(rng), random_vec<4>(rng)};
  std::vector<Vec<4>> avs{a * vs[0], a * vs[1]};
  auto pushed = push(a, primitive<4>(std::span<const Vec<4>>(vs)));
  auto direct = primitive<4>(std::span<const Vec<4>>(avs));
  EXPECT_LT((pushed - direct).norm(), 1e-12);
  double det4 = compound<4, 4>(a, 4)(0, 0);
  EXPECT_NEAR(det4, a.determinant(), 1e-10);
}

TEST(Exterior, RectangularCompoundComposesWithFrames) {
  std::mt19937_64 rng(4);
  Mat<4, 2> f;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) f(i, j) = std::normal_distribution<double>()(rng);
  auto c = compound<4, 2>(f, 2);
  EXPECT_EQ(c.rows(), 6);
  EXPECT_EQ(c.cols(), 1);
  auto p = primitive<4>({Vec<4>(f.col(0)), Vec<4>(f.col(1))});
  EXPECT_LT((c.col(0) - p.coeffs()).norm(), 1e-12);
}

TEST(Exterior, InteriorMatchesDenseContraction) {
  std::mt19937_64 rng(5);
  for (int q = 1; q <= 3; ++q) {
    auto v = random_multivector<4>(rng, q);
    Vec4 l = random_vec<4>(rng);
    auto dense = to_dense(v);
    DenseTensor<4> contracted(q - 1);
    for (std::size_t f = 0; f < dense.data.size(); ++f) {
      auto idx = dense.unflat(f);
      std::vector<int> rest(idx.begin() + 1, idx.end());
      contracted.at(rest) += l(idx[0]) * dense.data[f];
    }
    auto got = interior(l, v);
    auto want = from_dense(contracted);
    EXPECT_LT((got - want).norm(), 1e-12) << "q=" << q;
  }
  EXPECT_THROW(interior(Vec4::Zero().eval(), MultiVector<4>::scalar(1)), std::invalid_argument);
}

TEST(Exterior, InteriorIsAntiderivation) {
  std::mt19937_64 rng(6);
  Vec4 l = random_vec<4>(rng);
  auto a = MultiVector<4>::vector(random_vec<4>(rng));
  auto b = random_multivector<4>(rng, 2);
  auto lhs = interior(l, wedge(a, b));
  auto rhs = interior(l, a)[0] * b - wedge(a, interior(l, b));
  EXPECT_LT((lhs - rhs).norm(), 1e-12);
}

TEST(Exterior, BilinearInteriorOnPrimitives) {
  std::mt19937_64 rng(7);
  Mat4 k1 = random_mat<4>(rng), k2 = random_mat<4>(rng);
  // An antisymmetric bilinear map R^4 x R^4 -> R^4.
  auto c = [&](const Vec4& u, const Vec4& v) -> Vec4 {
    return (k1 * u) * (v.dot(k2 * Vec4::Ones())) - (k1 * v) * (u.dot(k2 * Vec4::Ones())) +
           Vec4(u(0) * v(1) - u(1) * v(0), u(2) * v(3) - u(3) * v(2), 0.0, u(1) * v(3) - u(3) * v(1));
  };
  Vec4 u = random_vec<4>(rng), v = random_vec<4>(rng), w = random_vec<4>(rng);
  auto mv = [](const Vec4& x) { return MultiVector<4>::vector(x); };
  // i_C(u^v^w) = C(u,v)^w - C(u,w)^v + C(v,w)^u
  auto want = wedge(mv(c(u, v)), mv(w)) - wedge(mv(c(u, w)), mv(v)) + wedge(mv(c(v, w)), mv(u));
  auto got = interior_bilinear<4>(c, primitive<4>({u, v, w}));
  EXPECT_LT((got - want).norm(), 1e-10);
  auto got2 = interior_bilinear<4>(c, primitive<4>({u, v}));
  EXPECT_LT((got2.coeffs() - c(u, v)).norm(), 1e-10);
}

TEST(Exterior, ExtendedOperatorIsDerivation) {
  std::mt19937_64 rng(8);
  Mat4 l = random_mat<4>(rng);
  Vec4 u = random_vec<4>(rng), v = random_vec<4>(rng), w = random_vec<4>(rng);
  ExtMat<4> l1 = l;
  auto l3 = extend_operator<4>(l1, 1, 3);
  auto want = primitive<4>({Vec4(l * u), v, w}) + primitive<4>({u, Vec4(l * v), w}) +
              primitive<4>({u, v, Vec4(l * w)});
  auto got = MultiVector<4>(3, l3 * primitive<4>({u, v, w}).coeffs());
  EXPECT_LT((got - want).norm(), 1e-10);

  // Pair operator on 3-vectors: R(u^v)^w - R(u^w)^v + R(v^w)^u.
  ExtMat<4> r2 = ExtMat<4>::Zero(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r2(i, j) = std::normal_distribution<double>()(rng);
  auto r3 = extend_operator<4>(r2, 2, 3);
  auto rr = [&](const Vec4& a, const Vec4& b) {
    return MultiVector<4>(2, r2 * primitive<4>({a, b}).coeffs());
  };
  auto mv = [](const Vec4& x) { return MultiVector<4>::vector(x); };
  auto want2 = wedge(rr(u, v), mv(w)) - wedge(rr(u, w), mv(v)) + wedge(rr(v, w), mv(u));
  auto got2 = MultiVector<4>(3, r3 * primitive<4>({u, v, w}).coeffs());
  EXPECT_LT((got2 - want2).norm(), 1e-10);
}

TEST(Exterior, DenseRoundTripAndSlotwisePush) {
  std::mt19937_64 rng(9);
  auto v = random_multivector<3>(rng, 2);
  auto d = to_dense(v);
  EXPECT_TRUE(d.is_alternating(1e-14));
  EXPECT_LT((from_dense(d) - v).norm(), 1e-15);
  Mat3 a = random_mat<3>(rng);
  std::vector<Mat3> maps{a, a};
  auto pushed = push_slotwise<3>(maps, d);
  EXPECT_TRUE(pushed.is_alternating(1e-12));
  EXPECT_LT((from_dense(pushed) - push(a, v)).norm(), 1e-12);
  // Mixed slots act as A M B^T on the matrix form.
  Mat3 b = random_mat<3>(rng);
  std::vector<Mat3> mixed{a, b};
  auto pm = push_slotwise<3>(mixed, d);
  Mat3 want = a * to_matrix(v) * b.transpose();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::array<int, 2> idx{i, j};
      EXPECT_NEAR(pm.at(idx), want(i, j), 1e-12);
    }
}

TEST(Exterior, MatrixFormOfTwoVectors) {
  Vec3 u(1, 2, 3), v(-1, 0.5, 2);
  auto w = primitive<3>({u, v});
  Mat3 m = to_matrix(w);
  EXPECT_LT((m - (u * v.transpose() - v * u.transpose())).norm(), 1e-15);
  EXPECT_LT((from_matrix<3>(m) - w).norm(), 1e-15);
  std::array<int, 2> rev{2, 0};
  EXPECT_NEAR(w.component(rev), -w[1], 1e-15);
}
