#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rebalance {

// Dense row-major matrix. Scalar is double in library interfaces; the nnet
// internals also instantiate it with Dual for exact second-order terms.
template <class Scalar>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, Scalar fill = Scalar{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Mat from_rows(std::initializer_list<std::initializer_list<Scalar>> rows) {
    Mat m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& r : rows) {
      assert(r.size() == m.cols_);
      std::size_t j = 0;
      for (const auto& v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<Scalar> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const Scalar> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<Scalar>& data() { return data_; }
  const std::vector<Scalar>& data() const { return data_; }

  void append_row(std::span<const Scalar> r) {
    assert(r.size() == cols_ || rows_ == 0);
    if (rows_ == 0) cols_ = r.size();
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Scalar> data_;
};

using Matrix = Mat<double>;

// C = A * B  (ikj loop order; inner loop contiguous over B's row)
template <class S>
Mat<S> matmul(const Mat<S>& a, const Mat<S>& b) {
  assert(a.cols() == b.rows());
  Mat<S> c(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    S* ci = &c(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const S aip = a(i, p);
      const S* bp = &b(p, 0);
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

template <class S>
Mat<S> transposed(const Mat<S>& m) {
  Mat<S> t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

// C = A^T * B
template <class S>
Mat<S> matmul_tn(const Mat<S>& a, const Mat<S>& b) {
  assert(a.rows() == b.rows());
  return matmul(transposed(a), b);
}

// C = A * B^T  (transpose once, then the contiguous-inner-loop kernel)
template <class S>
Mat<S> matmul_nt(const Mat<S>& a, const Mat<S>& b) {
  assert(a.cols() == b.cols());
  return matmul(a, transposed(b));
}

inline bool all_finite(const Matrix& m) {
  for (double v : m.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace rebalance

#include "rebalance/dual.hpp"

namespace rebalance {

// Dual matrices multiply as value/tangent planes: C_v = A_v B_v and
// C_t = A_t B_v + A_v B_t. The split keeps the inner loops on plain doubles
// (vectorizable), and all-zero tangent planes (network parameters) skip
// their product entirely.
namespace dual_detail {

inline void split(const Mat<Dual>& m, Matrix& value, Matrix& tangent, bool& tangent_zero) {
  value = Matrix(m.rows(), m.cols());
  tangent = Matrix(m.rows(), m.cols());
  tangent_zero = true;
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    value.data()[i] = m.data()[i].v;
    const double t = m.data()[i].t;
    tangent.data()[i] = t;
    tangent_zero &= t == 0.0;
  }
}

inline Mat<Dual> join(const Matrix& value, const Matrix& tangent) {
  Mat<Dual> out(value.rows(), value.cols());
  for (std::size_t i = 0; i < value.data().size(); ++i)
    out.data()[i] = Dual(value.data()[i], tangent.data()[i]);
  return out;
}

inline void add_into(Matrix& into, const Matrix& other) {
  for (std::size_t i = 0; i < into.data().size(); ++i) into.data()[i] += other.data()[i];
}

template <class Kernel>
Mat<Dual> dual_product(const Mat<Dual>& a, const Mat<Dual>& b, Kernel&& kernel) {
  Matrix av, at, bv, bt;
  bool at_zero, bt_zero;
  split(a, av, at, at_zero);
  split(b, bv, bt, bt_zero);
  Matrix cv = kernel(av, bv);
  Matrix ct(cv.rows(), cv.cols());
  if (!at_zero) add_into(ct, kernel(at, bv));
  if (!bt_zero) add_into(ct, kernel(av, bt));
  return join(cv, ct);
}

}  // namespace dual_detail

inline Mat<Dual> matmul(const Mat<Dual>& a, const Mat<Dual>& b) {
  return dual_detail::dual_product(a, b,
                                   [](const Matrix& x, const Matrix& y) { return matmul(x, y); });
}

inline Mat<Dual> matmul_tn(const Mat<Dual>& a, const Mat<Dual>& b) {
  return dual_detail::dual_product(
      a, b, [](const Matrix& x, const Matrix& y) { return matmul_tn(x, y); });
}

inline Mat<Dual> matmul_nt(const Mat<Dual>& a, const Mat<Dual>& b) {
  return dual_detail::dual_product(
      a, b, [](const Matrix& x, const Matrix& y) { return matmul_nt(x, y); });
}

}  // namespace rebalance
