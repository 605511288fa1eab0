#include "bratteli/exact.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

namespace bratteli {

RatMatrix to_rational(const IntMatrix& m) {
  RatMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = Rational(m(r, c));
  return out;
}

RatVector to_rational(const IntVector& v) {
  RatVector out;
  out.reserve(v.size());
  for (const auto& z : v) out.emplace_back(z);
  return out;
}

// Bareiss fraction-free elimination.
Integer determinant(const IntMatrix& m) {
  if (!m.square()) throw ArgumentError("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  IntMatrix a = m;
  Integer prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n && a(p, k) == 0) ++p;
      if (p == n) return 0;
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(p, c));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) {
        a(i, j) = a(i, j) * a(k, k) - a(i, k) * a(k, j);
        mpz_divexact(a(i, j).get_mpz_t(), a(i, j).get_mpz_t(), prev.get_mpz_t());
      }
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

Rational determinant(const RatMatrix& m) {
  if (!m.square()) throw ArgumentError("determinant of a non-square matrix");
  RatMatrix a = m;
  const std::size_t n = a.rows();
  Rational det = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    while (p < n && a(p, k) == 0) ++p;
    if (p == n) return 0;
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(p, c));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, k) == 0) continue;
      Rational f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RatMatrix& a) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < a.cols() && row < a.rows(); ++col) {
    std::size_t p = row;
    while (p < a.rows() && a(p, col) == 0) ++p;
    if (p == a.rows()) continue;
    for (std::size_t c = 0; c < a.cols(); ++c) std::swap(a(row, c), a(p, c));
    Rational inv = 1 / a(row, col);
    for (std::size_t c = 0; c < a.cols(); ++c) a(row, c) *= inv;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      if (r == row || a(r, col) == 0) continue;
      Rational f = a(r, col);
      for (std::size_t c = 0; c < a.cols(); ++c) a(r, c) -= f * a(row, c);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace

std::size_t rank(const RatMatrix& m) {
  RatMatrix a = m;
  return rref(a).size();
}

std::vector<RatVector> left_null_space(const RatMatrix& a) {
  RatMatrix t = a.transpose();
  auto pivots = rref(t);
  std::vector<bool> is_pivot(t.cols(), false);
  for (auto p : pivots) is_pivot[p] = true;
  std::vector<RatVector> basis;
  for (std::size_t free = 0; free < t.cols(); ++free) {
    if (is_pivot[free]) continue;
    RatVector x(t.cols(), Rational(0));
    x[free] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) x[pivots[i]] = -t(i, free);
    Integer lcm = 1;
    for (const auto& v : x) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), v.get_den_mpz_t());
    for (auto& v : x) v *= lcm;
    basis.push_back(std::move(x));
  }
  return basis;
}

RatVector solve(const RatMatrix& a, const RatVector& b) {
  if (!a.square() || a.rows() != b.size()) throw ArgumentError("solve: shape mismatch");
  const std::size_t n = a.rows();
  RatMatrix aug(n, n + 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) aug(r, c) = a(r, c);
    aug(r, n) = b[r];
  }
  auto pivots = rref(aug);
  if (pivots.size() < n || pivots.back() >= n) throw ArgumentError("solve: singular system");
  RatVector x(n);
  for (std::size_t r = 0; r < n; ++r) x[r] = aug(r, n);
  return x;
}

Rational l1_distance(const RatVector& a, const RatVector& b) {
  if (a.size() != b.size()) throw ArgumentError("l1_distance: length mismatch");
  Rational d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += abs(a[i] - b[i]);
  return d;
}

Rational sum(const RatVector& v) {
  Rational s = 0;
  for (const auto& x : v) s += x;
  return s;
}

Integer sum(const IntVector& v) {
  Integer s = 0;
  for (const auto& x : v) s += x;
  return s;
}

Integer gcd_of(const IntVector& v) {
  Integer g = 0;
  for (const auto& x : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  return g;
}

std::string to_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

std::string to_string(const Integer& z) { return z.get_str(); }

namespace {

Rational parse_decimal(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) negative = text[i++] == '-';
  std::string digits;
  long exponent = 0;
  bool seen_digit = false, seen_point = false;
  for (; i < text.size(); ++i) {
    char ch = text[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits.push_back(ch);
      seen_digit = true;
      if (seen_point) --exponent;
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw ArgumentError("not a number: '" + text + "'");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    std::size_t used = 0;
    long e = 0;
    try {
      e = std::stol(text.substr(i + 1), &used);
    } catch (const std::exception&) {
      throw ArgumentError("not a number: '" + text + "'");
    }
    if (used != text.size() - i - 1) throw ArgumentError("not a number: '" + text + "'");
    exponent += e;
    i = text.size();
  }
  if (i != text.size()) throw ArgumentError("not a number: '" + text + "'");
  Rational value(Integer(digits, 10));
  Integer ten = 10, scale;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  if (exponent < 0)
    value /= scale;
  else
    value *= scale;
  value.canonicalize();
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) return parse_decimal(text);
  Rational num = parse_decimal(text.substr(0, slash));
  Rational den = parse_decimal(text.substr(slash + 1));
  if (den == 0) throw ArgumentError("zero denominator in '" + text + "'");
  return num / den;
}

Rational rational_from_double(double x) {
  Rational r;
  mpq_set_d(r.get_mpq_t(), x);
  return r;
}

double to_double(const Rational& r) { return r.get_d(); }

std::vector<double> to_double(const RatVector& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x.get_d());
  return out;
}

ScaledMatrix::ScaledMatrix(IntMatrix numerators, Integer denominator)
    : num_(std::move(numerators)), den_(std::move(denominator)) {
  if (den_ <= 0) throw ArgumentError("ScaledMatrix needs a positive denominator");
  normalize();
}

ScaledMatrix ScaledMatrix::identity(std::size_t n) {
  return ScaledMatrix(IntMatrix::identity(n), 1);
}

ScaledMatrix ScaledMatrix::from_rational(const RatMatrix& m) {
  Integer lcm = 1;
  for (const auto& x : m.data()) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.get_den_mpz_t());
  IntMatrix num(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      Rational scaled = m(r, c) * lcm;
      num(r, c) = scaled.get_num();
    }
  return ScaledMatrix(std::move(num), lcm);
}

void ScaledMatrix::normalize() {
  Integer g = den_;
  for (const auto& x : num_.data()) {
    if (g == 1) break;
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  }
  if (g == 1) return;
  for (std::size_t r = 0; r < num_.rows(); ++r)
    for (std::size_t c = 0; c < num_.cols(); ++c)
      mpz_divexact(num_(r, c).get_mpz_t(), num_(r, c).get_mpz_t(), g.get_mpz_t());
  mpz_divexact(den_.get_mpz_t(), den_.get_mpz_t(), g.get_mpz_t());
}

Rational ScaledMatrix::at(std::size_t r, std::size_t c) const {
  Rational q(num_(r, c), den_);
  q.canonicalize();
  return q;
}

RatMatrix ScaledMatrix::to_rational() const {
  RatMatrix out(rows(), cols());
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols(); ++c) out(r, c) = at(r, c);
  return out;
}

Integer ScaledMatrix::max_row_distance_numerator() const {
  Integer best = 0, acc, diff;
  for (std::size_t a = 0; a < rows(); ++a)
    for (std::size_t b = a + 1; b < rows(); ++b) {
      mpz_set_ui(acc.get_mpz_t(), 0);
      for (std::size_t c = 0; c < cols(); ++c) {
        mpz_sub(diff.get_mpz_t(), num_(a, c).get_mpz_t(), num_(b, c).get_mpz_t());
        mpz_abs(diff.get_mpz_t(), diff.get_mpz_t());
        mpz_add(acc.get_mpz_t(), acc.get_mpz_t(), diff.get_mpz_t());
      }
      if (acc > best) mpz_swap(best.get_mpz_t(), acc.get_mpz_t());
    }
  return best;
}

Rational ScaledMatrix::max_row_distance() const {
  Rational d(max_row_distance_numerator(), den_);
  d.canonicalize();
  return d;
}

bool ScaledMatrix::max_row_distance_below(const Rational& bound) const {
  // num/den < p/q  <=>  num*q < p*den
  Integer lhs = max_row_distance_numerator(), rhs;
  mpz_mul(lhs.get_mpz_t(), lhs.get_mpz_t(), bound.get_den_mpz_t());
  mpz_mul(rhs.get_mpz_t(), bound.get_num_mpz_t(), den_.get_mpz_t());
  return lhs < rhs;
}

ScaledMatrix operator*(const ScaledMatrix& a, const ScaledMatrix& b) {
  ScaledMatrix out;
  out.num_ = a.num_ * b.num_;
  out.den_ = a.den_ * b.den_;
  out.normalize();
  return out;
}

void ScaledMatrix::assign(const IntMatrix& numerators, const Integer& denominator) {
  if (denominator <= 0) throw ArgumentError("ScaledMatrix needs a positive denominator");
  num_ = numerators;
  den_ = denominator;
  normalize();
}

void ScaledMatrix::assign_product(const ScaledMatrix& a, const ScaledMatrix& b) {
  if (a.cols() != b.rows()) throw ArgumentError("dimension mismatch in matrix product");
  if (num_.rows() != a.rows() || num_.cols() != b.cols()) num_ = IntMatrix(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) {
      mpz_ptr x = num_(r, c).get_mpz_t();
      mpz_set_ui(x, 0);
      for (std::size_t k = 0; k < a.cols(); ++k) mpz_addmul(x, a.num_(r, k).get_mpz_t(), b.num_(k, c).get_mpz_t());
    }
  mpz_mul(den_.get_mpz_t(), a.den_.get_mpz_t(), b.den_.get_mpz_t());
  normalize();
}

}  // namespace bratteli
