#pragma once

// Exterior algebra of R^D in the increasing multi-index basis.
//
// A q-vector is stored by its components V_I, I = (i_1 < ... < i_q), with the
// determinant normalisation: (u_1 ^ ... ^ u_q)_I = det[u_b(i_a)].  The dense
// (D^q array) form used for slotwise pushes is the alternating tensor
// sum_sigma sign(sigma) u_sigma(1) (x) ... (x) u_sigma(q), whose increasing
// components coincide with the compact ones.

#include "pathforms/linalg.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <functional>
#include <span>
#include <vector>

namespace pathforms {

inline constexpr int kMaxExtDim = 6;

namespace detail {

struct ExtBasis {
  int dim = 0;
  int degree = 0;
  std::vector<unsigned> masks;
  std::vector<std::array<int, kMaxExtDim>> indices;
  std::array<int, 1 << kMaxExtDim> position{};
};

inline ExtBasis make_basis(int dim, int degree) {
  ExtBasis b;
  b.dim = dim;
  b.degree = degree;
  b.position.fill(-1);
  // Lexicographic order of increasing index tuples.
  std::vector<unsigned> all;
  for (unsigned m = 0; m < (1u << dim); ++m)
    if (std::popcount(m) == degree) all.push_back(m);
  auto key = [dim](unsigned m) {
    std::array<int, kMaxExtDim> a{};
    a.fill(dim);
    int k = 0;
    for (int i = 0; i < dim; ++i)
      if (m & (1u << i)) a[k++] = i;
    return a;
  };
  std::sort(all.begin(), all.end(),
            [&](unsigned x, unsigned y) { return key(x) < key(y); });
  for (unsigned m : all) {
    b.position[m] = static_cast<int>(b.masks.size());
    b.masks.push_back(m);
    b.indices.push_back(key(m));
  }
  return b;
}

inline const ExtBasis& ext_basis(int dim, int degree) {
  static const auto table = [] {
    std::array<std::array<ExtBasis, kMaxExtDim + 1>, kMaxExtDim + 1> t;
    for (int d = 0; d <= kMaxExtDim; ++d)
      for (int q = 0; q <= d; ++q) t[d][q] = make_basis(d, q);
    return t;
  }();
  if (dim < 0 || dim > kMaxExtDim || degree < 0 || degree > dim)
    throw std::invalid_argument("exterior basis: degree " + std::to_string(degree) +
                                " out of range for dimension " + std::to_string(dim));
  return table[dim][degree];
}

// Sign of e_I ^ e_J relative to e_{I u J} (masks must be disjoint).
inline int wedge_sign(unsigned a, unsigned b) {
  int inversions = 0;
  while (b) {
    int j = std::countr_zero(b);
    b &= b - 1;
    inversions += std::popcount(a >> (j + 1));
  }
  return (inversions & 1) ? -1 : 1;
}

inline double minor_det(const auto& a, const std::array<int, kMaxExtDim>& r,
                        const std::array<int, kMaxExtDim>& c, int q) {
  switch (q) {
    case 0:
      return 1.0;
    case 1:
      return a(r[0], c[0]);
    case 2:
      return a(r[0], c[0]) * a(r[1], c[1]) - a(r[0], c[1]) * a(r[1], c[0]);
    case 3:
      return a(r[0], c[0]) * (a(r[1], c[1]) * a(r[2], c[2]) - a(r[1], c[2]) * a(r[2], c[1])) -
             a(r[0], c[1]) * (a(r[1], c[0]) * a(r[2], c[2]) - a(r[1], c[2]) * a(r[2], c[0])) +
             a(r[0], c[2]) * (a(r[1], c[0]) * a(r[2], c[1]) - a(r[1], c[1]) * a(r[2], c[0]));
    default: {
      Eigen::MatrixXd m(q, q);
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) m(i, j) = a(r[i], c[j]);
      return m.determinant();
    }
  }
}

}  // namespace detail

inline int ext_dim(int dim, int degree) { return binomial(dim, degree); }

/// Homogeneous q-vector on R^D.
template <int D>
class MultiVector {
 public:
  using Coeffs = ExtVec<D>;

  MultiVector() : degree_(0), coeffs_(Coeffs::Zero(1)) {}

  explicit MultiVector(int degree) : degree_(degree), coeffs_(Coeffs::Zero(checked_dim(degree))) {}

  MultiVector(int degree, const Coeffs& c) : degree_(degree), coeffs_(c) {
    if (c.size() != checked_dim(degree))
      throw std::invalid_argument("MultiVector: coefficient count does not match degree");
  }

  static MultiVector scalar(double s) {
    MultiVector v(0);
    v.coeffs_(0) = s;
    return v;
  }

  static MultiVector vector(const Vec<D>& u) {
    MultiVector v(1);
    v.coeffs_ = u;
    return v;
  }

  static MultiVector basis(int degree, int i) {
    MultiVector v(degree);
    v.coeffs_(i) = 1.0;
    return v;
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(coeffs_.size()); }
  const Coeffs& coeffs() const { return coeffs_; }
  Coeffs& coeffs() { return coeffs_; }
  double operator[](int i) const { return coeffs_(i); }

  // Component for an arbitrary index tuple (antisymmetric extension).
  double component(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != degree_)
      throw std::invalid_argument("MultiVector::component: wrong number of indices");
    unsigned mask = 0;
    int sign = 1;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      unsigned bit = 1u << idx[a];
      if (mask & bit) return 0.0;
      if (std::popcount(mask >> (idx[a] + 1)) & 1) sign = -sign;
      mask |= bit;
    }
    return sign * coeffs_(detail::ext_basis(D, degree_).position[mask]);
  }

  double norm() const { return coeffs_.norm(); }

  MultiVector& operator+=(const MultiVector& o) {
    check_same(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  MultiVector& operator-=(const MultiVector& o) {
    check_same(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  MultiVector& operator*=(double s) {
    coeffs_ *= s;
    return *this;
  }
  friend MultiVector operator+(MultiVector a, const MultiVector& b) { return a += b; }
  friend MultiVector operator-(MultiVector a, const MultiVector& b) { return a -= b; }
  friend MultiVector operator*(double s, MultiVector a) { return a *= s; }
  friend MultiVector operator*(MultiVector a, double s) { return a *= s; }
  friend MultiVector operator-(MultiVector a) { return a *= -1.0; }

 private:
  static int checked_dim(int degree) {
    if (degree < 0 || degree > D)
      throw std::invalid_argument("MultiVector: degree " + std::to_string(degree) +
                                  " exceeds dimension " + std::to_string(D));
    return binomial(D, degree);
  }
  void check_same(const MultiVector& o) const {
    if (o.degree_ != degree_) throw std::invalid_argument("MultiVector: degree mismatch");
  }

  int degree_;
  Coeffs coeffs_;
};

template <int D>
MultiVector<D> wedge(const MultiVector<D>& a, const MultiVector<D>& b) {
  const int p = a.degree(), r = b.degree();
  if (p + r > D) throw std::invalid_argument("wedge: total degree exceeds dimension");
  const auto& ba = detail::ext_basis(D, p);
  const auto& bb = detail::ext_basis(D, r);
  const auto& bc = detail::ext_basis(D, p + r);
  MultiVector<D> out(p + r);
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; j < b.size(); ++j) {
      unsigned mi = ba.masks[i], mj = bb.masks[j];
      if (mi & mj) continue;
      out.coeffs()(bc.position[mi | mj]) += detail::wedge_sign(mi, mj) * a[i] * b[j];
    }
  }
  return out;
}

template <int D>
MultiVector<D> primitive(std::span<const Vec<D>> vs) {
  auto out = MultiVector<D>::scalar(1.0);
  for (const auto& v : vs) out = wedge(out, MultiVector<D>::vector(v));
  return out;
}

template <int D>
MultiVector<D> primitive(std::initializer_list<Vec<D>> vs) {
  std::vector<Vec<D>> tmp(vs);
  return primitive<D>(std::span<const Vec<D>>(tmp));
}

/// q-th compound (matrix of q x q minors) of an R x C matrix.
template <int R, int C>
ExtMat<(R > C ? R : C)> compound(const Mat<R, C>& a, int q) {
  const auto& br = detail::ext_basis(R, q);
  const auto& bc = detail::ext_basis(C, q);
  ExtMat<(R > C ? R : C)> out(br.masks.size(), bc.masks.size());
  for (std::size_t i = 0; i < br.masks.size(); ++i)
    for (std::size_t j = 0; j < bc.masks.size(); ++j)
      out(i, j) = detail::minor_det(a, br.indices[i], bc.indices[j], q);
  return out;
}

template <int D>
MultiVector<D> push(const Mat<D, D>& a, const MultiVector<D>& v) {
  if (v.degree() == 0) return v;
  if (v.degree() == 1) return MultiVector<D>::vector(a * v.coeffs());
  return MultiVector<D>(v.degree(), compound<D, D>(a, v.degree()) * v.coeffs());
}

/// Contraction with a covector in the first slot:
/// i_l(b1 ^ ... ^ bq) = sum_j (-1)^(j+1) l(b_j) b1 ^ .. ^ (no b_j) ^ .. ^ bq.
template <int D>
MultiVector<D> interior(const Vec<D>& l, const MultiVector<D>& v) {
  const int q = v.degree();
  if (q == 0) throw std::invalid_argument("interior: cannot contract a scalar");
  const auto& b = detail::ext_basis(D, q);
  const auto& bo = detail::ext_basis(D, q - 1);
  MultiVector<D> out(q - 1);
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    unsigned m = b.masks[i];
    for (int a = 0; a < q; ++a) {
      int idx = b.indices[i][a];
      double s = (a & 1) ? -1.0 : 1.0;
      out.coeffs()(bo.position[m & ~(1u << idx)]) += s * l(idx) * v[i];
    }
  }
  return out;
}

/// Contraction with an antisymmetric bilinear map C : R^D x R^D -> R^D:
/// i_C(b1 ^ .. ^ bq) = sum_{a<b} (-1)^(a+b+1) C(b_a, b_b) ^ (rest).
template <int D>
MultiVector<D> interior_bilinear(const std::function<Vec<D>(const Vec<D>&, const Vec<D>&)>& c,
                                 const MultiVector<D>& v) {
  const int q = v.degree();
  if (q < 2) throw std::invalid_argument("interior_bilinear: degree must be at least 2");
  // C on pairs of standard basis vectors.
  std::array<std::array<Vec<D>, D>, D> tab;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) tab[i][j] = c(Vec<D>::Unit(i), Vec<D>::Unit(j));
  const auto& b = detail::ext_basis(D, q);
  const auto& br = detail::ext_basis(D, q - 2);
  MultiVector<D> out(q - 1);
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const auto& idx = b.indices[i];
    for (int a = 0; a < q; ++a)
      for (int bb = a + 1; bb < q; ++bb) {
        // 1-based positions a+1, bb+1: sign (-1)^(a+bb+3) = (-1)^(a+bb+1).
        double s = ((a + bb + 1) & 1) ? -1.0 : 1.0;
        unsigned rest = b.masks[i] & ~(1u << idx[a]) & ~(1u << idx[bb]);
        auto head = MultiVector<D>::vector(tab[idx[a]][idx[bb]]);
        auto tail = MultiVector<D>::basis(q - 2, br.position[rest]);
        out += (s * v[i]) * wedge(head, tail);
      }
  }
  return out;
}

/// Extend an operator L on the p-th power to the q-th power (q >= p):
/// L(b1 ^ .. ^ bq) = sum over p-subsets S of sign(S) L(b_S) ^ b_{not S}.
template <int D>
ExtMat<D> extend_operator(const ExtMat<D>& l, int p, int q) {
  const auto& bp = detail::ext_basis(D, p);
  const auto& bq = detail::ext_basis(D, q);
  const auto& br = detail::ext_basis(D, q - p);
  if (l.rows() != static_cast<int>(bp.masks.size()) || l.cols() != l.rows())
    throw std::invalid_argument("extend_operator: operator size does not match degree");
  ExtMat<D> out = ExtMat<D>::Zero(bq.masks.size(), bq.masks.size());
  for (std::size_t j = 0; j < bq.masks.size(); ++j) {
    unsigned m = bq.masks[j];
    for (unsigned sub = m;; sub = (sub - 1) & m) {
      if (std::popcount(sub) == p) {
        unsigned rest = m & ~sub;
        int sign = detail::wedge_sign(sub, rest);
        auto head = MultiVector<D>(p, l.col(bp.position[sub]));
        auto tail = MultiVector<D>::basis(q - p, br.position[rest]);
        out.col(j) += sign * wedge(head, tail).coeffs();
      }
      if (sub == 0) break;
    }
  }
  return out;
}

/// Antisymmetric D x D matrix of a 2-vector: M(i,j) = V_ij.
template <int D>
Mat<D, D> to_matrix(const MultiVector<D>& v) {
  if (v.degree() != 2) throw std::invalid_argument("to_matrix: degree must be 2");
  const auto& b = detail::ext_basis(D, 2);
  Mat<D, D> m = Mat<D, D>::Zero();
  for (int i = 0; i < v.size(); ++i) {
    m(b.indices[i][0], b.indices[i][1]) = v[i];
    m(b.indices[i][1], b.indices[i][0]) = -v[i];
  }
  return m;
}

/// 2-vector of the antisymmetric part of a D x D matrix.
template <int D>
MultiVector<D> from_matrix(const Mat<D, D>& m) {
  const auto& b = detail::ext_basis(D, 2);
  MultiVector<D> v(2);
  for (int i = 0; i < v.size(); ++i) {
    int r = b.indices[i][0], c = b.indices[i][1];
    v.coeffs()(i) = 0.5 * (m(r, c) - m(c, r));
  }
  return v;
}

/// Full D^q component array.
template <int D>
struct DenseTensor {
  int degree = 0;
  std::vector<double> data;

  explicit DenseTensor(int q = 0) : degree(q), data(ipow(D, q), 0.0) {}

  static std::size_t ipow(int b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(b);
    return r;
  }

  double& at(std::span<const int> idx) { return data[flat(idx)]; }
  double at(std::span<const int> idx) const { return data[flat(idx)]; }

  std::size_t flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * D + static_cast<std::size_t>(i);
    return f;
  }

  std::vector<int> unflat(std::size_t f) const {
    std::vector<int> idx(degree);
    for (int a = degree - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(f % D);
      f /= D;
    }
    return idx;
  }

  bool is_alternating(double tol) const {
    for (std::size_t f = 0; f < data.size(); ++f) {
      auto idx = unflat(f);
      for (int a = 0; a + 1 < degree; ++a) {
        std::swap(idx[a], idx[a + 1]);
        if (std::abs(data[flat(idx)] + data[f]) > tol) return false;
        std::swap(idx[a], idx[a + 1]);
      }
    }
    return true;
  }
};

template <int D>
DenseTensor<D> to_dense(const MultiVector<D>& v) {
  DenseTensor<D> t(v.degree());
  for (std::size_t f = 0; f < t.data.size(); ++f) t.data[f] = v.component(t.unflat(f));
  return t;
}

template <int D>
MultiVector<D> from_dense(const DenseTensor<D>& t) {
  const auto& b = detail::ext_basis(D, t.degree);
  MultiVector<D> v(t.degree);
  for (int i = 0; i < v.size(); ++i)
    v.coeffs()(i) = t.at(std::span<const int>(b.indices[i].data(), t.degree));
  return v;
}

/// Slotwise push: slot a is mapped by maps[a].
template <int D>
DenseTensor<D> push_slotwise(std::span<const Mat<D, D>> maps, const DenseTensor<D>& t) {
  if (static_cast<int>(maps.size()) != t.degree)
    throw std::invalid_argument("push_slotwise: need one map per slot");
  DenseTensor<D> cur = t;
  for (int a = 0; a < t.degree; ++a) {
    DenseTensor<D> next(t.degree);
    for (std::size_t f = 0; f < cur.data.size(); ++f) {
      if (cur.data[f] == 0.0) continue;
      auto idx = cur.unflat(f);
      int src = idx[a];
      for (int r = 0; r < D; ++r) {
        idx[a] = r;
        next.data[next.flat(idx)] += maps[a](r, src) * cur.data[f];
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace pathforms
