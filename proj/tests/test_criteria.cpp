#include <doctest.h>

#include <cmath>
#include <random>

#include "bratteli/catalog.hpp"
#include "bratteli/criteria.hpp"

using namespace bratteli;

namespace {

// Minimum over all index quadruples; 0 as soon as any entry vanishes.
Rational phi_oracle(const IntMatrix& a) {
  for (const auto& x : a.data())
    if (x == 0) return 0;
  std::optional<Rational> best;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t s = 0; s < a.cols(); ++s) {
          Rational q(a(i, j) * a(r, s), a(r, j) * a(i, s));
          q.canonicalize();
          if (!best || q < *best) best = q;
        }
  return *best;
}

double projective_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double best = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) best = std::max(best, std::log(x[i] * y[j] / (x[j] * y[i])));
  return best;
}

IntMatrix random_matrix(std::mt19937& rng, std::size_t r, std::size_t c, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  IntMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

bool proves_several(const Verdict& det) {
  return det.proved() && det.witness.contains("rank") && det.witness["rank"].get<std::size_t>() >= 2;
}

}  // namespace

TEST_CASE("projective metric") {
  CHECK(projective_metric(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == doctest::Approx(0));
  CHECK(projective_metric(std::vector<double>{1, 2}, std::vector<double>{2, 1}) == doctest::Approx(std::log(4.0)));
  CHECK(projective_metric(RatVector{Rational(1), Rational(3)}, RatVector{Rational(1), Rational(3)}) == 0);
  CHECK_THROWS_AS(projective_metric(std::vector<double>{0, 1}, std::vector<double>{1, 1}), ArgumentError);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(3), y(3);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    CHECK(projective_metric(x, y) == doctest::Approx(projective_oracle(x, y)));
  }
}

TEST_CASE("phi matches quadruple enumeration on every 2x2 matrix with entries up to 5") {
  IntMatrix a(2, 2);
  for (int code = 0; code < 6 * 6 * 6 * 6; ++code) {
    int c = code;
    for (std::size_t k = 0; k < 4; ++k, c /= 6) a(k / 2, k % 2) = c % 6;
    if ((a(0, 0) == 0 && a(0, 1) == 0) || (a(1, 0) == 0 && a(1, 1) == 0)) continue;
    CHECK(contraction_stats(a).phi == phi_oracle(a));
  }
}

TEST_CASE("phi matches quadruple enumeration on random 3x3 and 4x4 matrices") {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 400; ++trial) {
    std::size_t n = 3 + trial % 2;
    IntMatrix a = random_matrix(rng, n, n, trial % 3 == 0 ? 0 : 1, 5);
    bool zero_row = false;
    for (std::size_t i = 0; i < n; ++i) zero_row = zero_row || sum(a.row(i)) == 0;
    if (zero_row) continue;
    auto st = contraction_stats(a);
    Rational phi = phi_oracle(a);
    CHECK(st.phi == phi);
    const double s = std::sqrt(phi.get_d());
    CHECK(st.tau == doctest::Approx((1 - s) / (1 + s)).epsilon(1e-12));
  }
}

TEST_CASE("contraction examples") {
  auto st = contraction_stats(IntMatrix{{5, 1}, {1, 5}});
  CHECK(st.phi == Rational(1, 25));
  CHECK(st.tau == doctest::Approx(2.0 / 3.0));
  auto zero = contraction_stats(IntMatrix{{1, 0}, {1, 1}});
  CHECK(zero.phi == 0);
  CHECK(zero.tau == 1);
  auto rank_one = contraction_stats(IntMatrix{{1, 2}, {2, 4}});
  CHECK(rank_one.phi == 1);
  CHECK(rank_one.tau == doctest::Approx(0));
  CHECK_THROWS_AS(contraction_stats(IntMatrix{{1, 1}, {0, 0}}), ArgumentError);
}

TEST_CASE("birkhoff coefficient is submultiplicative") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + trial % 2;
    IntMatrix a = random_matrix(rng, n, n, 1, 9), b = random_matrix(rng, n, n, 1, 9);
    CHECK(contraction_stats(a * b).tau <= contraction_stats(a).tau * contraction_stats(b).tau + 1e-9);
  }
}

TEST_CASE("min_sum proves unique ergodicity for the n-weighted two-vertex diagram") {
  auto d = catalog::two_vertex(parse_expression("n"));
  auto v = unique_ergodicity(d, UeCriterion::MinSum, 64);
  CHECK(v.proved());
  auto det = exact_count_determinant(d, 30, true);
  CHECK(det.refuted());
}

TEST_CASE("determinant criterion proves two measures for the n^2-weighted two-vertex diagram") {
  auto d = catalog::two_vertex(parse_expression("n^2"));
  CHECK_THROWS_AS(exact_count_determinant(d, 30), SingularError);
  auto det = exact_count_determinant(d, 30, true);
  CHECK(det.proved());
  CHECK(det.witness["rank"] == 2);
  auto ms = unique_ergodicity(d, UeCriterion::MinSum, 64);
  CHECK(ms.status == Status::Inconclusive);
  auto rd = unique_ergodicity(d, UeCriterion::RowDiff, 6, {2, 1 << 16});
  CHECK(rd.status == Status::Evidence);
  CHECK(rd.direction == "not uniquely ergodic");
}

TEST_CASE("row_diff on a stationary diagram gives a decreasing trace") {
  auto d = catalog::stationary(IntMatrix{{3, 0}, {1, 2}});
  auto v = unique_ergodicity(d, UeCriterion::RowDiff, 8);
  CHECK(v.status == Status::Evidence);
  CHECK(v.direction == "uniquely ergodic");
  for (std::size_t k = 1; k < v.trace.size(); ++k) CHECK(v.trace[k] < v.trace[k - 1]);
}

TEST_CASE("greedy telescoping reaches the requested diameters") {
  auto d = catalog::two_vertex(parse_expression("n"));
  auto s = greedy_telescoping(d, 5, 2);
  CHECK(s.achieved == 5);
  for (std::size_t k = 0; k < s.diameters.size(); ++k) {
    Rational target(1, 1);
    for (std::size_t i = 0; i <= k; ++i) target /= 2;
    CHECK(s.diameters[k] < target);
  }
  for (std::size_t k = 1; k < s.starts.size(); ++k) CHECK(s.starts[k] == s.starts[k - 1] + s.lengths[k - 1] + 1);
}

TEST_CASE("no two criteria contradict on catalog and random diagrams") {
  std::vector<BratteliDiagram> ds = {catalog::two_vertex(parse_expression("n")),
                                     catalog::two_vertex(parse_expression("n^2")),
                                     catalog::two_vertex(parse_expression("n+3")),
                                     catalog::stationary(IntMatrix{{3, 0}, {1, 2}}),
                                     catalog::stationary(IntMatrix{{2, 1}, {1, 1}})};
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t size = 2 + trial % 2;
    std::vector<IntMatrix> levels;
    for (int k = 0; k < 6; ++k) levels.push_back(random_matrix(rng, size, size, 1, 4));
    ds.emplace_back("random", IntVector(size, Integer(1)), levels);
  }
  for (const auto& d : ds) {
    bool ue = false;
    for (auto c : {UeCriterion::RowDiff, UeCriterion::MinSum, UeCriterion::TauProduct, UeCriterion::PhiSum,
                   UeCriterion::RatioSum, UeCriterion::NormGrowth}) {
      try {
        ue = ue || unique_ergodicity(d, c, 5, {1, 1 << 14}).proved();
      } catch (const Error&) {
      }
    }
    try {
      CHECK_FALSE((ue && proves_several(exact_count_determinant(d, 5, true))));
    } catch (const SingularError&) {
    }
  }
}

TEST_CASE("blocks on the n^2-weighted two-vertex diagram") {
  auto d = catalog::two_vertex(parse_expression("n^2"));
  auto r = blocks_analysis(d, BlockPartition::constant({{0}, {1}}), 10);
  CHECK(r.a.proved());
  CHECK(r.b.proved());
  for (const auto& c : r.c) CHECK(c.proved());
  for (const auto& dv : r.d) CHECK(dv.proved());
  CHECK(r.measure_count == std::optional<std::size_t>(2));
}

TEST_CASE("blocks on the stationary diagram") {
  auto d = catalog::stationary(IntMatrix{{3, 0}, {1, 2}});
  auto r = blocks_analysis(d, BlockPartition::constant({{0}}), 10);
  REQUIRE(r.c.size() == 1);
  CHECK(r.c[0].proved());
  CHECK_FALSE(r.e2.refuted());
}

TEST_CASE("partition validation") {
  auto d = catalog::two_vertex(parse_expression("n^2"));
  CHECK_THROWS_AS(blocks_analysis(d, BlockPartition::constant({{}, {1}}), 5), PartitionError);
  CHECK_THROWS_AS(blocks_analysis(d, BlockPartition::constant({{0}, {0, 1}}), 5), PartitionError);
  CHECK_THROWS_AS(blocks_analysis(d, BlockPartition::constant({{0}, {4}}), 5), PartitionError);
  auto p = BlockPartition::constant({{0}, {1}});
  auto back = BlockPartition::from_json(p.to_json());
  CHECK(back.blocks_at(d, 3) == p.blocks_at(d, 3));
}

TEST_CASE("chains on the countable family and the pascal diagram") {
  auto c = chain_analysis(catalog::countable_chain(parse_expression("n^3")), BlockPartition::singleton_blocks(), 10);
  CHECK(c.prefixes.size() >= 10);
  CHECK(c.c1.proved());
  CHECK(c.measure_claim == "countable");

  auto p = chain_analysis(catalog::pascal(), BlockPartition::singleton_blocks(), 10);
  CHECK(p.prefixes.empty());
  CHECK(p.measure_claim == "none");

  auto f = chain_analysis(catalog::two_vertex(parse_expression("n^2")), BlockPartition::singleton_blocks(), 10);
  CHECK(f.prefixes.size() == 2);
  CHECK(f.measure_claim == "finite:2");
}

TEST_CASE("criterion names round trip") {
  for (auto c : {UeCriterion::RowDiff, UeCriterion::MinSum, UeCriterion::TauProduct, UeCriterion::PhiSum,
                 UeCriterion::RatioSum, UeCriterion::NormGrowth})
    CHECK(parse_criterion(to_string(c)) == c);
  CHECK_THROWS(parse_criterion("bogus"));
}
