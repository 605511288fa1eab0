#include <doctest.h>

#include <cmath>
#include <random>

#include "bratteli/polynomial.hpp"

using namespace bratteli;

namespace {

Integer horner(const std::vector<long>& c, long n) {
  Integer acc = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * n + *it;
  return acc;
}

Polynomial from(const std::vector<long>& c) {
  std::vector<Integer> z(c.begin(), c.end());
  return Polynomial(z);
}

double partial(const RationalFunction& f, long from, long to) {
  double s = 0;
  for (long n = from; n <= to; ++n) s += f(n).get_d();
  return s;
}

}  // namespace

TEST_CASE("expressions parse to the expected polynomials") {
  const auto n = Polynomial::variable();
  CHECK(parse_expression("n^2+1") == n * n + Polynomial(1));
  CHECK(parse_expression("(n+1)*(n-1)") == n * n - Polynomial(1));
  CHECK(parse_expression("3") == Polynomial(3));
  CHECK(parse_expression("2*n^3 - n") == Polynomial(2) * n.pow(3) - n);
  CHECK_THROWS_AS(parse_expression("n^"), SchemaError);
  CHECK_THROWS_AS(parse_expression("m+1"), SchemaError);
}

TEST_CASE("evaluation agrees with Horner's rule") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<long> coef(-9, 9);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<long> c(1 + trial % 5);
    for (auto& x : c) x = coef(rng);
    Polynomial p = from(c);
    for (long n = -3; n <= 12; ++n) CHECK(p(n) == horner(c, n));
  }
}

TEST_CASE("sign certificates agree with exhaustive evaluation") {
  std::mt19937 rng(9);
  std::uniform_int_distribution<long> coef(-6, 6);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<long> c(1 + trial % 4);
    for (auto& x : c) x = coef(rng);
    Polynomial p = from(c);
    bool nonneg = true, pos = true;
    const long bound = std::max<long>(2, p.root_bound().get_si()) + 50;
    for (long n = 1; n <= bound; ++n) {
      nonneg = nonneg && p(n) >= 0;
      pos = pos && p(n) > 0;
    }
    CHECK(p.nonnegative_from(1) == nonneg);
    CHECK(p.positive_from(1) == pos);
  }
}

TEST_CASE("degree test on standard series") {
  const auto n = Polynomial::variable();
  CHECK_FALSE(series_test(RationalFunction(Polynomial(1), n)).converges);
  CHECK(series_test(RationalFunction(Polynomial(1), n * n)).converges);
  CHECK(series_test(RationalFunction(Polynomial(2), n * n + Polynomial(1))).converges);
  CHECK_FALSE(series_test(RationalFunction(n, n + Polynomial(1))).converges);
  CHECK_FALSE(sqrt_series_test(RationalFunction(Polynomial(1), n * n)).converges);
  CHECK(sqrt_series_test(RationalFunction(Polynomial(1), n.pow(3))).converges);
}

TEST_CASE("degree test verdicts match partial-sum behaviour") {
  const auto n = Polynomial::variable();
  std::vector<RationalFunction> cases = {
      {Polynomial(1), n},           {Polynomial(1), n * n},        {n, n * n + Polynomial(1)},
      {Polynomial(3), n.pow(3)},    {n, n + Polynomial(1)},        {Polynomial(2), n * n + Polynomial(1)},
      {n, n.pow(4) + n},            {Polynomial(1), n + Polynomial(5)}};
  for (const auto& f : cases) {
    const double head = partial(f, 1, 20000);
    const double tail = partial(f, 20001, 40000);
    if (series_test(f).converges)
      CHECK(tail < 1e-3);
    else
      CHECK(tail > 0.1 * std::min(1.0, head));
  }
}

TEST_CASE("limits and eventual ordering") {
  const auto n = Polynomial::variable();
  RationalFunction a(n, n + Polynomial(1));
  RationalFunction b(Polynomial(1), n);
  CHECK(*a.limit() == 1);
  CHECK(*b.limit() == 0);
  CHECK_FALSE(RationalFunction(n * n, n).limit().has_value());
  CHECK(compare_eventually(a, b) == 1);
  CHECK(eventual_min(std::vector<RationalFunction>{a, b}).to_string() == b.to_string());
  CHECK(eventual_max(std::vector<RationalFunction>{a, b}).to_string() == a.to_string());
  CHECK((a - a).is_zero());
  CHECK((a * b)(4) == Rational(4, 5) * Rational(1, 4));
}
