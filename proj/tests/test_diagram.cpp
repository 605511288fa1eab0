#include <doctest.h>

#include <random>

#include "bratteli/catalog.hpp"
#include "bratteli/diagram.hpp"

using namespace bratteli;

namespace {

Integer factorial(long n) {
  Integer f = 1;
  for (long i = 2; i <= n; ++i) f *= i;
  return f;
}

Integer binomial(long n, long k) {
  Integer b;
  mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return b;
}

BratteliDiagram random_prefix(std::mt19937& rng, std::size_t size, Level depth) {
  std::uniform_int_distribution<int> dist(1, 4);
  std::vector<IntMatrix> levels;
  for (Level n = 0; n < depth; ++n) {
    IntMatrix m(size, size);
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = 0; j < size; ++j) m(i, j) = dist(rng);
    levels.push_back(m);
  }
  return BratteliDiagram("random", IntVector(size, Integer(1)), levels);
}

}  // namespace

TEST_CASE("two-vertex diagram with weight n has factorial heights") {
  auto d = catalog::two_vertex(parse_expression("n"));
  for (Level n = 1; n <= 12; ++n) {
    auto h = d.heights(n);
    REQUIRE(h.size() == 2);
    CHECK(h[0] == factorial(static_cast<long>(n)));
    CHECK(h[1] == factorial(static_cast<long>(n)));
  }
}

TEST_CASE("pascal heights are binomial coefficients") {
  auto d = catalog::pascal();
  for (Level n = 1; n <= 15; ++n) {
    auto h = d.heights(n);
    REQUIRE(h.size() == n + 1);
    for (std::size_t k = 0; k <= n; ++k) CHECK(h[k] == binomial(static_cast<long>(n), static_cast<long>(k)));
  }
}

TEST_CASE("pascal stochastic entries follow the binomial ratios") {
  auto d = catalog::pascal();
  for (Level n = 1; n <= 12; ++n) {
    RatMatrix f = d.stochastic_matrix(n);
    REQUIRE(f.rows() == n + 2);
    REQUIRE(f.cols() == n + 1);
    for (std::size_t v = 0; v < f.rows(); ++v)
      for (std::size_t w = 0; w < f.cols(); ++w) {
        Rational expected = 0;
        if (w == v) expected = Rational(static_cast<long>(n + 1 - v), static_cast<long>(n + 1));
        if (w + 1 == v) expected = Rational(static_cast<long>(v), static_cast<long>(n + 1));
        expected.canonicalize();
        CHECK(f(v, w) == expected);
      }
  }
}

TEST_CASE("countable chain rows all sum to a(n) + n") {
  auto d = catalog::countable_chain(parse_expression("n^3"));
  for (Level n = 1; n <= 8; ++n) {
    IntMatrix f = d.incidence(n);
    CHECK(f.rows() == n + 2);
    CHECK(f.cols() == n + 1);
    for (std::size_t r = 0; r < f.rows(); ++r) CHECK(sum(f.row(r)) == Integer(static_cast<long>(n * n * n + n)));
  }
  CHECK_FALSE(d.bounded_rank(10).has_value());
}

TEST_CASE("countable chain rejects weights with a divergent series") {
  CHECK_THROWS_AS(catalog::countable_chain(parse_expression("n")), ParamError);
  CHECK_THROWS_AS(catalog::countable_chain(parse_expression("n^2")), ParamError);
  CHECK_NOTHROW(catalog::countable_chain(parse_expression("n^2+n^3")));
}

TEST_CASE("odometer heights multiply the bases") {
  auto d = catalog::odometer(std::vector<Integer>{2, 3, 5, 7});
  CHECK(d.heights(1) == IntVector{Integer(2)});
  CHECK(d.heights(2) == IntVector{Integer(6)});
  CHECK(d.heights(3) == IntVector{Integer(30)});
  CHECK(d.heights(4) == IntVector{Integer(210)});
}

TEST_CASE("stochastic matrices are row stochastic with the height formula") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = random_prefix(rng, 2 + trial % 2, 6);
    for (Level n = 1; n < 6; ++n) {
      RatMatrix f = d.stochastic_matrix(n);
      IntMatrix ft = d.incidence(n);
      auto hn = d.heights(n), hn1 = d.heights(n + 1);
      for (std::size_t v = 0; v < f.rows(); ++v) {
        CHECK(sum(f.row(v)) == 1);
        for (std::size_t w = 0; w < f.cols(); ++w) {
          Rational expected(ft(v, w) * hn[w], hn1[v]);
          expected.canonicalize();
          CHECK(f(v, w) == expected);
        }
      }
    }
  }
}

TEST_CASE("level cursor reproduces the stochastic matrices") {
  for (auto d : {catalog::two_vertex(parse_expression("n")), catalog::pascal(),
                 catalog::stationary(IntMatrix{{3, 0}, {1, 2}})}) {
    LevelCursor cur(d, 1);
    for (Level n = 1; n <= 8; ++n) {
      CHECK(cur.level() == n);
      CHECK(cur.stochastic().to_rational() == d.stochastic_matrix(n));
      cur.advance();
    }
  }
}

TEST_CASE("telescoping keeps heights of the kept levels") {
  auto d = catalog::two_vertex(parse_expression("n+1"));
  auto t = telescope(d, {0, 2, 5, 6});
  CHECK(t.heights(1) == d.heights(2));
  CHECK(t.heights(2) == d.heights(5));
  CHECK(t.heights(3) == d.heights(6));
  CHECK(t.incidence(1) == d.incidence(4) * d.incidence(3) * d.incidence(2));
  CHECK(t.incidence(2) == d.incidence(5));
  CHECK_THROWS(telescope(d, {1, 2}));
  CHECK_THROWS(telescope(d, {0, 3, 3}));
}

TEST_CASE("json round trip preserves the incidence data") {
  std::mt19937 rng(31);
  auto r = random_prefix(rng, 3, 4);
  for (auto d : {catalog::two_vertex(parse_expression("n^2")), catalog::pascal(),
                 catalog::countable_chain(parse_expression("n^3")), r}) {
    auto back = BratteliDiagram::from_json(d.to_json());
    CHECK(back.root_edges() == d.root_edges());
    for (Level n = 1; n <= 4; ++n) CHECK(back.incidence(n) == d.incidence(n));
  }
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(BratteliDiagram::from_json(nlohmann::json::array()), SchemaError);
  CHECK_THROWS_AS(BratteliDiagram::from_json({{"name", "empty"}}), SchemaError);
  CHECK_THROWS_AS(BratteliDiagram::from_json({{"rule", {{"shape", "spiral"}}}}), SchemaError);
  CHECK_THROWS_AS(BratteliDiagram("bad root", IntVector{Integer(0)}, {IntMatrix{{1}}}), StructureError);
  CHECK_THROWS_AS(BratteliDiagram("mismatch", IntVector{Integer(1), Integer(1)}, {IntMatrix{{1, 1, 1}}}),
                  StructureError);
  CHECK_THROWS_AS(BratteliDiagram("zero row", IntVector{Integer(1), Integer(1)}, {IntMatrix{{1, 1}, {0, 0}}}),
                  StructureError);
}

TEST_CASE("vertex selectors resolve against level sizes") {
  CHECK(VertexSelector::all().resolve(3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(VertexSelector::last().resolve(3) == std::vector<std::size_t>{2});
  CHECK(VertexSelector::of({1}).resolve(3) == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(VertexSelector::of({5}).resolve(3), ArgumentError);
}

TEST_CASE("structure reports") {
  auto tv = catalog::two_vertex(parse_expression("n"));
  CHECK(tv.simplicity(10).proved);
  CHECK(tv.connectivity(10).connected);
  CHECK(tv.bounded_rank(10) == std::optional<std::size_t>(2));
  CHECK_FALSE(tv.stationary_matrix().has_value());

  auto st = catalog::stationary(IntMatrix{{3, 0}, {1, 2}});
  CHECK(st.stationary_matrix() == std::optional<IntMatrix>(IntMatrix{{3, 0}, {1, 2}}));
  CHECK_FALSE(st.simplicity(10).simple_through_depth);

  CHECK_FALSE(catalog::pascal().bounded_rank(10).has_value());
}

TEST_CASE("paths must compose and use existing slots") {
  auto d = catalog::two_vertex(parse_expression("n+1"));
  FinitePath ok{{0, 1, 0}, {1, 1, 1}};
  CHECK_NOTHROW(validate_path(d, ok));
  FinitePath broken{{0, 1, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(validate_path(d, broken), ArgumentError);
  FinitePath slot{{0, 1, 0}, {1, 1, 5}};
  CHECK_THROWS_AS(validate_path(d, slot), ArgumentError);
}

TEST_CASE("catalog dispatch matches direct construction") {
  auto a = catalog::make("two_vertex", {{"a", "n"}});
  auto b = catalog::two_vertex(parse_expression("n"));
  for (Level n = 1; n <= 5; ++n) CHECK(a.incidence(n) == b.incidence(n));
  CHECK_THROWS_AS(catalog::make("two_vertex", nlohmann::json::object()), ParamError);
  CHECK_THROWS(catalog::make("unknown", nlohmann::json::object()));
}
