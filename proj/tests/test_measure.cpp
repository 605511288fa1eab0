#include <doctest.h>

#include <cmath>
#include <random>

#include "bratteli/catalog.hpp"
#include "bratteli/measure.hpp"

using namespace bratteli;

namespace {

std::shared_ptr<const BratteliDiagram> share(BratteliDiagram d) {
  return std::make_shared<const BratteliDiagram>(std::move(d));
}

Rational power(const Rational& x, long k) {
  Rational r = 1;
  for (long i = 0; i < k; ++i) r *= x;
  return r;
}

Rational binomial_mass(long n, long i, const Rational& p) {
  Integer c;
  mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(i));
  return Rational(c) * power(p, i) * power(1 - p, n - i);
}

// 2 ∏_{i=0}^{m} (1 − 2/(n+i+1)) for f̃ = [[n,1],[1,n]].
Rational two_vertex_diameter(long n, long m) {
  Rational r = 2;
  for (long i = 0; i <= m; ++i) {
    Rational f(2, n + i + 1);
    f.canonicalize();
    r *= 1 - f;
  }
  return r;
}

// Stochastic matrix of a level rebuilt from incidence and heights.
RatMatrix stochastic_oracle(const BratteliDiagram& d, Level n) {
  IntMatrix ft = d.incidence(n);
  IntVector hn = d.heights(n), hn1 = d.heights(n + 1);
  RatMatrix f(ft.rows(), ft.cols());
  for (std::size_t v = 0; v < ft.rows(); ++v)
    for (std::size_t w = 0; w < ft.cols(); ++w) {
      f(v, w) = Rational(ft(v, w) * hn[w], hn1[v]);
      f(v, w).canonicalize();
    }
  return f;
}

// Connected components of the graph joining rows of F_{n+m}⋯F_n at L1 distance ≤ ε.
std::size_t brute_force_clusters(const BratteliDiagram& d, Level n, Level m, double eps) {
  RatMatrix g = stochastic_oracle(d, n);
  for (Level k = n + 1; k <= n + m; ++k) g = stochastic_oracle(d, k) * g;
  const std::size_t size = g.rows();
  auto close = [&](std::size_t a, std::size_t b) {
    double dist = 0;
    for (std::size_t w = 0; w < g.cols(); ++w) dist += std::fabs(g(a, w).get_d() - g(b, w).get_d());
    return dist <= eps;
  };
  std::vector<bool> seen(size, false);
  std::size_t components = 0;
  for (std::size_t v = 0; v < size; ++v) {
    if (seen[v]) continue;
    ++components;
    std::vector<std::size_t> stack{v};
    seen[v] = true;
    while (!stack.empty()) {
      std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < size; ++b)
        if (!seen[b] && close(a, b)) {
          seen[b] = true;
          stack.push_back(b);
        }
    }
  }
  return components;
}

IntMatrix random_positive(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> dist(1, 5);
  IntMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("pascal binomial measures are invariant") {
  auto d = share(catalog::pascal());
  for (const Rational& p : {Rational(1, 2), Rational(1, 3), Rational(2, 5)}) {
    auto q = TowerMeasure::pascal(d, p);
    for (Level n = 1; n <= 25; ++n) {
      RatVector v = q.at(n);
      REQUIRE(v.size() == n + 1);
      for (std::size_t i = 0; i <= n; ++i) CHECK(v[i] == binomial_mass(static_cast<long>(n), static_cast<long>(i), p));
    }
    CHECK(check_invariance(q, 25).holds);
  }
}

TEST_CASE("a perturbed tower fails invariance at the perturbed level") {
  auto d = share(catalog::pascal());
  std::vector<RatVector> levels;
  for (Level n = 1; n <= 6; ++n) levels.push_back(TowerMeasure::pascal(d, Rational(1, 2)).at(n));
  levels[3][0] += Rational(1, 64);
  levels[3][1] -= Rational(1, 64);
  auto q = TowerMeasure::from_levels(d, levels);
  auto r = check_invariance(q, 6);
  CHECK_FALSE(r.holds);
  REQUIRE(r.first_failure.has_value());
  CHECK(*r.first_failure == 3);
}

TEST_CASE("slice diameters on the n-weighted two-vertex diagram match the product formula") {
  auto d = catalog::two_vertex(parse_expression("n"));
  for (long m = 0; m <= 15; ++m) CHECK(slice_diameter(polytope_slice(d, 1, static_cast<Level>(m))) == 0);
  for (long n = 2; n <= 5; ++n) {
    auto series = diameter_series(d, static_cast<Level>(n), 15);
    REQUIRE(series.size() == 16);
    for (long m = 0; m <= 15; ++m) CHECK(series[static_cast<std::size_t>(m)] == two_vertex_diameter(n, m));
  }
}

TEST_CASE("slices are nested: deeper vertex vectors are convex combinations") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    auto d = catalog::stationary(random_positive(rng, 2 + trial % 2));
    auto series = diameter_series(d, 1, 8);
    for (std::size_t m = 1; m < series.size(); ++m) CHECK(series[m] <= series[m - 1]);
    auto shallow = polytope_slice(d, 1, 2), deep = polytope_slice(d, 1, 3);
    RatMatrix f = d.stochastic_matrix(4);
    CHECK(deep.product == f * shallow.product);
  }
}

TEST_CASE("cylinder measures are additive over one-step extensions") {
  auto d = share(catalog::pascal());
  auto q = TowerMeasure::pascal(d, Rational(1, 3));
  FinitePath path{{0, 1, 0}, {1, 1, 0}, {1, 2, 0}};
  validate_path(*d, path);
  Rational parent = cylinder_measure(q, path);
  Rational children = 0;
  const std::size_t end = path.back().target;
  IntMatrix f = d->incidence(path.size());
  for (std::size_t v = 0; v < f.rows(); ++v)
    for (long s = 0; s < f(v, end).get_si(); ++s) {
      FinitePath ext = path;
      ext.push_back({end, v, static_cast<std::size_t>(s)});
      children += cylinder_measure(q, ext);
    }
  CHECK(children == parent);
  CHECK(parent == Rational(1, 3) * Rational(1, 3) * Rational(2, 3));
}

TEST_CASE("cluster counts agree with a brute-force product of stochastic matrices") {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    std::size_t size = 2 + trial % 2;
    std::vector<IntMatrix> levels;
    for (int k = 0; k < 12; ++k) {
      IntMatrix m = random_positive(rng, size);
      if (trial % 4 == 3) {
        for (std::size_t i = 0; i < size; ++i)
          for (std::size_t j = 0; j < size; ++j) m(i, j) = i == j ? m(i, j) * Integer(1000) : Integer(1);
      }
      levels.push_back(m);
    }
    BratteliDiagram d("random", IntVector(size, Integer(1)), levels);
    auto report = count_measures(d, 6, 0.05, 1);
    CHECK(report.clusters.size() == brute_force_clusters(d, 1, 6, 0.05));
  }
}

TEST_CASE("cluster count on the n^2-weighted two-vertex diagram is two and survives telescoping") {
  auto d = catalog::two_vertex(parse_expression("n^2"));
  auto report = count_measures(d, 20, 0.1, 2);
  CHECK(report.clusters.size() == 2);
  auto t = telescope(d, {0, 1, 2, 4, 7, 11, 16, 22, 29, 37});
  auto tr = count_measures(t, 6, 0.1, 2);
  CHECK(tr.clusters.size() == 2);
}

TEST_CASE("decomposition coefficients reproduce the tower") {
  auto d = share(catalog::pascal());
  auto q = TowerMeasure::pascal(d, Rational(2, 5));
  RatVector c = decompose(q, 2, 3);
  CHECK(c == q.at(6));
  CHECK(sum(c) == 1);
}

TEST_CASE("measure json round trip") {
  auto d = share(catalog::pascal());
  auto q = TowerMeasure::pascal(d, Rational(1, 3));
  auto back = TowerMeasure::from_json(d, q.to_json(5));
  for (Level n = 1; n <= 5; ++n) CHECK(back.at(n) == q.at(n));
  CHECK(back.max_level() == std::optional<Level>(5));
}
