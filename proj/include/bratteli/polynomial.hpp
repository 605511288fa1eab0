#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bratteli/exact.hpp"

namespace bratteli {

// Integer polynomial in the level variable n.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(long constant);  // NOLINT(google-explicit-constructor)
  Polynomial(const Integer& constant);  // NOLINT(google-explicit-constructor)
  explicit Polynomial(std::vector<Integer> coefficients);
  static Polynomial variable();

  bool is_zero() const { return coeffs_.empty(); }
  // Degree of the zero polynomial is -1.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  Integer leading() const { return coeffs_.empty() ? Integer(0) : coeffs_.back(); }
  const std::vector<Integer>& coefficients() const { return coeffs_; }
  bool is_constant() const { return coeffs_.size() <= 1; }

  Integer operator()(const Integer& n) const;
  Integer operator()(long n) const { return (*this)(Integer(n)); }
  // Sign of p(n) for all large n: -1, 0 or 1.
  int eventual_sign() const { return coeffs_.empty() ? 0 : sgn(coeffs_.back()); }
  // Smallest N such that p has no real root in [N, ∞) (Cauchy bound).
  Integer root_bound() const;
  // True iff p(n) >= 0 for every integer n >= from (exact).
  bool nonnegative_from(long from) const;
  bool positive_from(long from) const;

  std::string to_string() const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial operator-() const;
  Polynomial pow(unsigned exponent) const;
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.coeffs_ == b.coeffs_; }

 private:
  void trim();
  std::vector<Integer> coeffs_;
};

// Parses expr := term (('+'|'-') term)*; term := factor ('*' factor)*;
// factor := int | "n" | factor '^' int | '(' expr ')'. Throws SchemaError.
Polynomial parse_expression(const std::string& text);

// Quotient of integer polynomials, used as the summand of a series in n.
class RationalFunction {
 public:
  RationalFunction() : num_(0), den_(1) {}
  RationalFunction(Polynomial num, Polynomial den);  // NOLINT(google-explicit-constructor)
  RationalFunction(const Polynomial& p) : RationalFunction(p, Polynomial(1)) {}  // NOLINT

  const Polynomial& numerator() const { return num_; }
  const Polynomial& denominator() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  // deg P − deg Q; meaningless for the zero function.
  int degree() const { return num_.degree() - den_.degree(); }
  int eventual_sign() const { return num_.eventual_sign() * den_.eventual_sign(); }
  Rational operator()(long n) const;

  // lim_{n→∞}; nullopt when the limit is infinite.
  std::optional<Rational> limit() const;

  std::string to_string() const;

  friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b);

 private:
  Polynomial num_;
  Polynomial den_;
};

// Sign of f(n) − g(n) for all large n.
int compare_eventually(const RationalFunction& f, const RationalFunction& g);
const RationalFunction& eventual_min(const std::vector<RationalFunction>& fs);
const RationalFunction& eventual_max(const std::vector<RationalFunction>& fs);

struct DegreeTest {
  bool converges = false;
  // Decay exponent d with c(n) ~ C·n^d; halved for square-root summands.
  double exponent = 0;
  std::string summand;
  std::string reason;
};

// Convergence of Σ c(n) for an eventually non-negative rational summand.
DegreeTest series_test(const RationalFunction& c);
// Convergence of Σ √c(n).
DegreeTest sqrt_series_test(const RationalFunction& c);

}  // namespace bratteli
