#include <doctest.h>

#include <random>

#include "bratteli/exact.hpp"

using namespace bratteli;

namespace {

IntMatrix random_int(std::mt19937& rng, std::size_t r, std::size_t c, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  IntMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

// Leibniz expansion, independent of the elimination used by determinant().
Integer leibniz(const IntMatrix& m) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Integer total = 0;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    Integer term = inversions % 2 ? -1 : 1;
    for (std::size_t i = 0; i < n; ++i) term *= m(i, perm[i]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

RatMatrix stochastic_rows(const IntMatrix& m) {
  RatMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Integer s = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j);
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = Rational(m(i, j), s);
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j).canonicalize();
  }
  return out;
}

}  // namespace

TEST_CASE("rationals serialize as p/q strings") {
  Rational half(3, 6);
  half.canonicalize();
  CHECK(to_string(half) == "1/2");
  CHECK(to_string(Rational(4)) == "4/1");
  CHECK(to_string(Rational(-2, 3)) == "-2/3");
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("7") == Rational(7));
  CHECK(parse_rational("-3/9") == Rational(-1, 3));
  CHECK_THROWS(parse_rational("abc"));
}

TEST_CASE("matrix product and transpose identities") {
  IntMatrix a{{1, 2}, {3, 4}};
  IntMatrix b{{0, 1}, {1, 0}};
  CHECK(a * b == IntMatrix{{2, 1}, {4, 3}});
  CHECK((a * b).transpose() == b.transpose() * a.transpose());
  IntVector x{Integer(1), Integer(1)};
  CHECK(transpose_times(a, x) == a.transpose() * x);
  CHECK_THROWS_AS(a * IntMatrix(3, 3), ArgumentError);
}

TEST_CASE("determinant agrees with the Leibniz expansion") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 1 + trial % 4;
    IntMatrix m = random_int(rng, n, n, -4, 5);
    CHECK(determinant(m) == leibniz(m));
    CHECK(determinant(to_rational(m)) == Rational(leibniz(m)));
  }
}

TEST_CASE("determinant is multiplicative") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    IntMatrix a = random_int(rng, 3, 3, -3, 3), b = random_int(rng, 3, 3, -3, 3);
    CHECK(determinant(a * b) == determinant(a) * determinant(b));
  }
}

TEST_CASE("left null space vectors annihilate the matrix") {
  RatMatrix a = to_rational(IntMatrix{{1, 2}, {2, 4}, {0, 1}});
  auto basis = left_null_space(a);
  REQUIRE(basis.size() == 1);
  auto prod = transpose_times(a, basis.front());
  for (const auto& v : prod) CHECK(v == 0);
  CHECK(rank(a) == 2);
}

TEST_CASE("solve returns an exact solution") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    IntMatrix m = random_int(rng, 3, 3, -5, 5);
    if (determinant(m) == 0) continue;
    RatVector b{Rational(1), Rational(-2), Rational(3, 7)};
    RatMatrix a = to_rational(m);
    CHECK(a * solve(a, b) == b);
  }
  CHECK_THROWS_AS(solve(to_rational(IntMatrix{{1, 1}, {1, 1}}), RatVector{Rational(1), Rational(0)}), ArgumentError);
}

TEST_CASE("scaled stochastic products match rational products") {
  std::mt19937 rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 2 + trial % 3;
    IntMatrix a = random_int(rng, n, n, 1, 6), b = random_int(rng, n, n, 1, 6);
    RatMatrix ra = stochastic_rows(a), rb = stochastic_rows(b);
    ScaledMatrix sa = ScaledMatrix::from_rational(ra), sb = ScaledMatrix::from_rational(rb);
    RatMatrix expected = ra * rb;
    CHECK((sa * sb).to_rational() == expected);

    Rational best = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) best = std::max(best, l1_distance(expected.row(i), expected.row(j)));
    CHECK((sa * sb).max_row_distance() == best);
    CHECK((sa * sb).max_row_distance_below(best + Rational(1, 1000)));
    CHECK_FALSE((sa * sb).max_row_distance_below(best));
  }
}

TEST_CASE("gcd and sums") {
  IntVector v{Integer(12), Integer(18), Integer(30)};
  CHECK(gcd_of(v) == 6);
  CHECK(sum(v) == 60);
  CHECK(sum(RatVector{Rational(1, 2), Rational(1, 3)}) == Rational(5, 6));
}
