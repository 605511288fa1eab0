#include "bratteli/polynomial.hpp"

#include <algorithm>
#include <cctype>

namespace bratteli {

Polynomial::Polynomial(long constant) : coeffs_{Integer(constant)} { trim(); }
Polynomial::Polynomial(const Integer& constant) : coeffs_{constant} { trim(); }
Polynomial::Polynomial(std::vector<Integer> coefficients) : coeffs_(std::move(coefficients)) { trim(); }

Polynomial Polynomial::variable() { return Polynomial(std::vector<Integer>{0, 1}); }

void Polynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

Integer Polynomial::operator()(const Integer& n) const {
  Integer acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * n + *it;
  return acc;
}

Integer Polynomial::root_bound() const {
  if (coeffs_.size() <= 1) return 0;
  // 1 + max |a_i / a_d|, rounded up.
  Rational best = 0;
  for (std::size_t i = 0; i + 1 < coeffs_.size(); ++i) {
    Rational q(abs(coeffs_[i]), abs(coeffs_.back()));
    q.canonicalize();
    if (q > best) best = q;
  }
  Integer ceil;
  mpz_cdiv_q(ceil.get_mpz_t(), best.get_num_mpz_t(), best.get_den_mpz_t());
  return ceil + 1;
}

bool Polynomial::nonnegative_from(long from) const {
  if (is_zero()) return true;
  if (eventual_sign() < 0) return false;
  Integer bound = root_bound();
  for (Integer n = from; n <= bound; ++n)
    if ((*this)(n) < 0) return false;
  return true;
}

bool Polynomial::positive_from(long from) const {
  if (is_zero() || eventual_sign() < 0) return false;
  Integer bound = root_bound();
  for (Integer n = from; n <= bound; ++n)
    if ((*this)(n) <= 0) return false;
  return true;
}

std::string Polynomial::to_string() const {
  if (coeffs_.empty()) return "0";
  std::string out;
  for (std::size_t k = coeffs_.size(); k-- > 0;) {
    const Integer& a = coeffs_[k];
    if (a == 0) continue;
    Integer mag = abs(a);
    if (out.empty()) {
      if (a < 0) out += "-";
    } else {
      out += a < 0 ? " - " : " + ";
    }
    bool unit = mag == 1 && k > 0;
    if (!unit) out += mag.get_str();
    if (k > 0) {
      if (!unit) out += "*";
      out += "n";
      if (k > 1) out += "^" + std::to_string(k);
    }
  }
  return out;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<Integer> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Integer(0));
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) c[i] += a.coeffs_[i];
  for (std::size_t i = 0; i < b.coeffs_.size(); ++i) c[i] += b.coeffs_[i];
  return Polynomial(std::move(c));
}

Polynomial Polynomial::operator-() const {
  std::vector<Integer> c = coeffs_;
  for (auto& x : c) x = -x;
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return Polynomial();
  std::vector<Integer> c(a.coeffs_.size() + b.coeffs_.size() - 1, Integer(0));
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(c));
}

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result(1), base = *this;
  while (exponent) {
    if (exponent & 1u) result = result * base;
    base = base * base;
    exponent >>= 1u;
  }
  return result;
}

namespace {

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& text) : text_(text) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError("expression '" + text_ + "': " + what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char ch) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  Integer integer() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    return Integer(text_.substr(start, pos_ - start), 10);
  }

  Polynomial expr() {
    Polynomial acc = term();
    for (;;) {
      if (accept('+'))
        acc = acc + term();
      else if (accept('-'))
        acc = acc - term();
      else
        return acc;
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (accept('*')) acc = acc * factor();
    return acc;
  }

  Polynomial factor() {
    Polynomial base = atom();
    while (accept('^')) {
      Integer e = integer();
      if (e > 64) fail("exponent too large");
      base = base.pow(static_cast<unsigned>(e.get_ui()));
    }
    return base;
  }

  Polynomial atom() {
    skip_space();
    if (accept('(')) {
      Polynomial inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (pos_ < text_.size() && text_[pos_] == 'n') {
      ++pos_;
      return Polynomial::variable();
    }
    return Polynomial(integer());
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_expression(const std::string& text) { return ExpressionParser(text).parse(); }

RationalFunction::RationalFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw ArgumentError("rational function with zero denominator");
  if (num_.is_zero()) den_ = Polynomial(1);
}

Rational RationalFunction::operator()(long n) const {
  Integer d = den_(n);
  if (d == 0) throw ArgumentError("rational function pole at n = " + std::to_string(n));
  Rational q(num_(n), d);
  q.canonicalize();
  return q;
}

std::optional<Rational> RationalFunction::limit() const {
  if (num_.is_zero()) return Rational(0);
  if (num_.degree() > den_.degree()) return std::nullopt;
  if (num_.degree() < den_.degree()) return Rational(0);
  Rational q(num_.leading(), den_.leading());
  q.canonicalize();
  return q;
}

std::string RationalFunction::to_string() const {
  if (den_ == Polynomial(1)) return num_.to_string();
  return "(" + num_.to_string() + ")/(" + den_.to_string() + ")";
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
  if (a.den_ == b.den_) return RationalFunction(a.num_ + b.num_, a.den_);
  return RationalFunction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
  if (a.den_ == b.den_) return RationalFunction(a.num_ - b.num_, a.den_);
  return RationalFunction(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
  return RationalFunction(a.num_ * b.num_, a.den_ * b.den_);
}

RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
  if (b.num_.is_zero()) throw ArgumentError("division by the zero rational function");
  return RationalFunction(a.num_ * b.den_, a.den_ * b.num_);
}

int compare_eventually(const RationalFunction& f, const RationalFunction& g) {
  return (f - g).eventual_sign();
}

const RationalFunction& eventual_min(const std::vector<RationalFunction>& fs) {
  if (fs.empty()) throw ArgumentError("eventual_min of an empty set");
  const RationalFunction* best = &fs.front();
  for (const auto& f : fs)
    if (compare_eventually(f, *best) < 0) best = &f;
  return *best;
}

const RationalFunction& eventual_max(const std::vector<RationalFunction>& fs) {
  if (fs.empty()) throw ArgumentError("eventual_max of an empty set");
  const RationalFunction* best = &fs.front();
  for (const auto& f : fs)
    if (compare_eventually(f, *best) > 0) best = &f;
  return *best;
}

DegreeTest series_test(const RationalFunction& c) {
  DegreeTest t;
  t.summand = c.to_string();
  if (c.is_zero()) {
    t.converges = true;
    t.exponent = -1e300;
    t.reason = "summand is identically zero";
    return t;
  }
  if (c.eventual_sign() < 0) throw ArgumentError("series summand eventually negative: " + t.summand);
  int d = c.degree();
  t.exponent = d;
  t.converges = d <= -2;
  t.reason = "deg P - deg Q = " + std::to_string(d) + (t.converges ? " <= -2" : " > -2");
  return t;
}

DegreeTest sqrt_series_test(const RationalFunction& c) {
  DegreeTest t;
  t.summand = "sqrt(" + c.to_string() + ")";
  if (c.is_zero()) {
    t.converges = true;
    t.exponent = -1e300;
    t.reason = "summand is identically zero";
    return t;
  }
  if (c.eventual_sign() < 0) throw ArgumentError("series summand eventually negative: " + t.summand);
  int d = c.degree();
  t.exponent = d / 2.0;
  t.converges = d <= -3;
  t.reason = "(deg P - deg Q)/2 = " + std::to_string(d) + "/2" + (t.converges ? " < -1" : " >= -1");
  return t;
}

}  // namespace bratteli
