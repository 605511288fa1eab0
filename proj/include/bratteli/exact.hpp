#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "bratteli/error.hpp"

namespace bratteli {

using Integer = mpz_class;
using Rational = mpq_class;
using IntVector = std::vector<Integer>;
using RatVector = std::vector<Rational>;
using Level = std::size_t;

// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw ArgumentError("ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  bool square() const { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<T> row(std::size_t r) const {
    return std::vector<T>(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_);
  }
  std::vector<T> col(std::size_t c) const {
    std::vector<T> out;
    out.reserve(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out.push_back((*this)(r, c));
    return out;
  }

  Matrix transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  static Matrix identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = T(1);
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using IntMatrix = Matrix<Integer>;
using RatMatrix = Matrix<Rational>;

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw ArgumentError("matrix product shape mismatch");
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    }
  return out;
}

template <class T>
std::vector<T> operator*(const Matrix<T>& a, const std::vector<T>& x) {
  if (a.cols() != x.size()) throw ArgumentError("matrix-vector shape mismatch");
  std::vector<T> out(a.rows(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

// y = Aᵀx without forming the transpose.
template <class T>
std::vector<T> transpose_times(const Matrix<T>& a, const std::vector<T>& x) {
  if (a.rows() != x.size()) throw ArgumentError("transpose-vector shape mismatch");
  std::vector<T> out(a.cols(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * x[i];
  }
  return out;
}

RatMatrix to_rational(const IntMatrix& m);
RatVector to_rational(const IntVector& v);

Integer determinant(const IntMatrix& m);
Rational determinant(const RatMatrix& m);
std::size_t rank(const RatMatrix& m);

// Basis of {x : xA = 0} (left null space), each vector scaled to integers.
std::vector<RatVector> left_null_space(const RatMatrix& a);

// Solves A x = b for square nonsingular A; throws ArgumentError otherwise.
RatVector solve(const RatMatrix& a, const RatVector& b);

Rational l1_distance(const RatVector& a, const RatVector& b);
Rational sum(const RatVector& v);
Integer sum(const IntVector& v);
Integer gcd_of(const IntVector& v);

// "p/q" with q > 0; integers render as "p/1".
std::string to_string(const Rational& r);
std::string to_string(const Integer& z);
// Accepts "p/q", "p", or a decimal literal such as "0.25".
Rational parse_rational(const std::string& text);
Rational rational_from_double(double x);
double to_double(const Rational& r);
std::vector<double> to_double(const RatVector& v);

// Integer matrix over a shared positive denominator, kept in lowest terms.
// Long stochastic products stay fast because only one gcd pass runs per step.
class ScaledMatrix {
 public:
  ScaledMatrix() = default;
  ScaledMatrix(IntMatrix numerators, Integer denominator);
  static ScaledMatrix identity(std::size_t n);
  static ScaledMatrix from_rational(const RatMatrix& m);

  std::size_t rows() const { return num_.rows(); }
  std::size_t cols() const { return num_.cols(); }
  const IntMatrix& numerators() const { return num_; }
  const Integer& denominator() const { return den_; }
  Rational at(std::size_t r, std::size_t c) const;
  RatMatrix to_rational() const;

  // Max over row pairs of the L1 distance, i.e. the slice diameter.
  Rational max_row_distance() const;
  // Exact test max_row_distance() < bound.
  bool max_row_distance_below(const Rational& bound) const;

  friend ScaledMatrix operator*(const ScaledMatrix& a, const ScaledMatrix& b);
  // In-place forms that reuse existing storage; `this` must alias neither argument.
  void assign(const IntMatrix& numerators, const Integer& denominator);
  void assign_product(const ScaledMatrix& a, const ScaledMatrix& b);

 private:
  void normalize();
  Integer max_row_distance_numerator() const;

  IntMatrix num_;
  Integer den_ = 1;
};

}  // namespace bratteli
