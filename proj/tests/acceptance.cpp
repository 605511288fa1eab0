// End-to-end acceptance checks; one PASS/FAIL line per check, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "bratteli/catalog.hpp"
#include "bratteli/criteria.hpp"
#include "bratteli/measure.hpp"
#include "bratteli/stationary.hpp"
#include "bratteli/subdiagram.hpp"
#include "bratteli/vershik.hpp"
#include "bratteli/words.hpp"

using namespace bratteli;

namespace {

struct Check {
  std::ostringstream failures;
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failures << "\n    failed: " << what;
    }
  }
};

std::shared_ptr<const BratteliDiagram> share(BratteliDiagram d) {
  return std::make_shared<const BratteliDiagram>(std::move(d));
}

Rational ratio(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

Rational power(const Rational& x, long k) {
  Rational r = 1;
  for (long i = 0; i < k; ++i) r *= x;
  return r;
}

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

std::set<std::string> factors_of(const std::string& w, std::size_t n) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out.insert(w.substr(i, n));
  return out;
}

void stationary_upper_triangular(Check& c) {
  auto d = catalog::stationary(IntMatrix{{3, 0}, {1, 2}});
  auto rep = stationary_measures(d);
  auto dist = rep.distinction.distinguished();
  c.expect(dist.size() == 1 && rep.classes.classes[dist[0]] == std::vector<std::size_t>{0},
           "exactly one distinguished class, {0}");
  const StationaryMeasure* finite = nullptr;
  for (const auto& m : rep.measures)
    if (m.kind == StationaryMeasure::Kind::Finite) finite = &m;
  c.expect(finite && finite->exact, "finite measure is exact");
  if (finite)
    for (Level n = 1; n <= 30; ++n)
      c.expect(finite->values(d, n) == RatVector{Rational(1), Rational(0)}, "tower masses 1 and 0 at level " + std::to_string(n));
  RatMatrix g = stochastic_oracle(d, 1);
  for (long n = 1; n <= 30; ++n) {
    Rational t = power(ratio(2, 3), n);
    c.expect(g == RatMatrix{{Rational(1), Rational(0)}, {1 - t, t}}, "stochastic power " + std::to_string(n));
    c.expect(d.stochastic_matrix(static_cast<Level>(n)) == stochastic_oracle(d, static_cast<Level>(n)),
             "stochastic matrix at level " + std::to_string(n));
    g = stochastic_oracle(d, static_cast<Level>(n + 1)) * g;
  }
  auto v = unique_ergodicity(d, UeCriterion::RowDiff, 8);
  c.expect(v.status == Status::Evidence && v.direction == "uniquely ergodic", "row_diff gives evidence of unique ergodicity");
  for (std::size_t k = 1; k < v.trace.size(); ++k) c.expect(v.trace[k] < v.trace[k - 1], "row_diff trace strictly decreasing");
}

void pascal_binomial(Check& c) {
  auto d = share(catalog::pascal());
  for (const Rational& p : {ratio(1, 2), ratio(1, 3), ratio(2, 5)}) {
    auto q = TowerMeasure::pascal(d, p);
    for (Level n = 1; n <= 25; ++n) {
      RatVector v = q.at(n);
      for (std::size_t i = 0; i <= n; ++i) {
        Integer b;
        mpz_bin_uiui(b.get_mpz_t(), n, i);
        c.expect(v[i] == Rational(b) * power(p, static_cast<long>(i)) * power(1 - p, static_cast<long>(n - i)),
                 "binomial tower mass");
      }
    }
    c.expect(check_invariance(q, 25).holds, "invariance to level 25 for p = " + to_string(p));
  }
  for (Level n = 1; n <= 25; ++n) {
    RatMatrix f = d->stochastic_matrix(n);
    for (std::size_t v = 0; v < f.rows(); ++v)
      for (std::size_t w = 0; w < f.cols(); ++w) {
        Rational expected = 0;
        if (w == v) expected = ratio(static_cast<long>(n + 1 - v), static_cast<long>(n + 1));
        if (w + 1 == v) expected = ratio(static_cast<long>(v), static_cast<long>(n + 1));
        c.expect(f(v, w) == expected, "stochastic entry at level " + std::to_string(n));
      }
  }
  auto chains = chain_analysis(*d, BlockPartition::singleton_blocks(), 10);
  c.expect(chains.prefixes.empty() && chains.measure_claim == "none", "no infinite chain survives");
}

void two_vertex_linear(Check& c) {
  auto d = catalog::two_vertex(parse_expression("n"));
  c.expect(unique_ergodicity(d, UeCriterion::MinSum, 64).proved(), "min_sum proves unique ergodicity");
  auto s = greedy_telescoping(d, 8, 1);
  c.expect(s.achieved == 8, "greedy telescoping reaches 8 targets");
  for (std::size_t k = 0; k < s.diameters.size(); ++k)
    c.expect(s.diameters[k] < power(ratio(1, 2), static_cast<long>(k + 1)), "block diameter below 2^-k");
  for (long m = 0; m <= 20; ++m) {
    Rational closed = 2;
    for (long i = 0; i <= m; ++i) closed *= 1 - ratio(2, i + 2);
    c.expect(slice_diameter(polytope_slice(d, 1, static_cast<Level>(m))) == closed, "base-1 slice diameter");
  }
}

void two_vertex_quadratic(Check& c) {
  auto d = catalog::two_vertex(parse_expression("n^2"));
  auto det = exact_count_determinant(d, 30, true);
  c.expect(det.proved() && det.witness["rank"] == 2, "determinant criterion proves exactly two measures");
  auto rep = count_measures(d, 30, 0.1);
  c.expect(rep.clusters.size() == 2, "two clusters at depth 30");
  c.expect(rep.min_separation && *rep.min_separation > ratio(1, 10), "clusters separated by more than 0.1");
}

void subdiagram_suite(Check& c) {
  auto s = SubdiagramSpec::constant({0});
  auto lin = catalog::two_vertex(parse_expression("n"));
  auto r1 = extension_test(lin, s, 30);
  c.expect(r1.thin.proved(), "linear weight: vertex subdiagram is thin");
  c.expect(r1.infinite(), "linear weight: extension is infinite");
  auto quad = catalog::two_vertex(parse_expression("n^2"));
  auto r2 = extension_test(quad, s, 30);
  c.expect(r2.thin.refuted(), "quadratic weight: vertex subdiagram is not thin");
  c.expect(r2.finite(), "quadratic weight: extension is finite");
  for (auto* r : {&r1, &r2}) {
    c.expect(r->consistent, "three finiteness series agree");
    c.expect(r->series_towers == r->series_masses && r->series_masses == r->series_growth, "series partial sums coincide");
  }
  // Closed-form terms: ∏_{k<n}(a(k)+1) / ∏_{k≤n} a(k).
  for (const char* e : {"n", "n^2"}) {
    Polynomial a = parse_expression(e);
    auto rep = extension_test(catalog::two_vertex(a), s, 12);
    Rational partial = 0;
    for (long n = 1; n <= 12; ++n) {
      Rational term = 1;
      for (long k = 1; k < n; ++k) term *= Rational(a(k) + 1);
      for (long k = 1; k <= n; ++k) term /= Rational(a(k));
      partial += term;
      c.expect(rep.series_towers[static_cast<std::size_t>(n - 1)] == partial, "series term from height recursion");
    }
  }
}

void countable_family(Check& c) {
  auto d = share(catalog::countable_chain(parse_expression("n^3")));
  std::vector<SubdiagramSpec> specs = {SubdiagramSpec::constant({0}), SubdiagramSpec::constant({1}),
                                       SubdiagramSpec::vertex({{1}, {2}})};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto r = extension_test(*d, specs[i], 15);
    c.expect(r.finite(), "odometer B" + std::to_string(i) + " has a finite extension");
    auto sub = share(restrict(*d, specs[i]));
    auto q = extend_measure(d, specs[i], odometer_measure(sub), 15);
    c.expect(check_invariance(q, 15).holds, "extended measure from B" + std::to_string(i) + " is invariant");
  }
  auto chains = chain_analysis(*d, BlockPartition::singleton_blocks(), 10);
  c.expect(chains.prefixes.size() >= 10, "at least 10 chain prefixes at depth 10");
}

void vershik_orbits(Check& c) {
  auto od = catalog::odometer(parse_expression("3"));
  auto o = EdgeOrder::consecutive();
  FinitePath p = minimal_path(od, o, 8, 0);
  std::set<std::vector<std::size_t>> seen;
  std::size_t wraps = 0, first_wrap = 0;
  for (std::size_t step = 1; step <= 6561; ++step) {
    std::vector<std::size_t> key;
    for (const auto& e : p) key.push_back(e.slot);
    seen.insert(key);
    bool wrapped = false;
    p = truncated_step(od, o, p, &wrapped);
    if (wrapped && !wraps++) first_wrap = step;
  }
  c.expect(seen.size() == 6561 && wraps == 1 && first_wrap == 6561, "all 3^8 paths visited once before the wrap");
  auto stats = orbit_frequencies(od, o, minimal_path(od, o, 8, 0), 6561, level_one_cylinders(od));
  for (const auto& f : stats.frequencies) c.expect(f == ratio(1, 3), "level-one frequency exactly 1/3");

  auto tv = catalog::two_vertex(parse_expression("n"));
  auto ts = orbit_frequencies(tv, o, minimal_path(tv, o, 12, 0), 100000, level_one_cylinders(tv));
  // The vertex swap is an automorphism, so the unique measure puts 1/2 on each root edge.
  for (const auto& f : ts.frequencies) c.expect(std::fabs(f.get_d() - 0.5) < 1e-2, "frequency within 0.01 of 1/2");
}

void symbolic_suite(Check& c) {
  auto fib = generate(SubstitutionRule::parse("a:ab,b:a"), 100000);
  auto prof = complexity_profile(fib, 200);
  bool sturmian = true;
  for (std::size_t n = 0; n <= 200; ++n) sturmian = sturmian && prof.p[n] == n + 1;
  c.expect(sturmian, "p(n) = n+1 for n <= 200");
  auto counts = factor_counts(fib.text.substr(0, 5000), 12);
  for (std::size_t n = 1; n <= 12; ++n) c.expect(counts[n] == factors_of(fib.text.substr(0, 5000), n).size(), "factor count oracle");
  c.expect(!prof.ultimately_periodic(), "no periodicity witness on the fibonacci word");
  c.expect(complexity_profile(Word::periodic("aab", 900), 40).ultimately_periodic(), "periodic word flagged");
  c.expect(return_words(fib, "a").words == std::vector<std::string>{"a", "ab"}, "return words to a");

  BoundsInput in;
  in.regular_bispecial = special_factors(fib, 30).regular;
  in.min_frequencies = min_frequencies(fib, 60);
  auto rep = measure_bounds(complexity_profile(fib, 60), in);
  c.expect(rep.ue_evidence && rep.best_bound == std::optional<long>(1), "bounds: evidence of unique ergodicity, bound 1");

  std::vector<std::size_t> four, three;
  for (std::size_t n = 1; n <= 200; ++n) {
    four.push_back(4 * n + 3);
    three.push_back(3 * n + 1);
  }
  auto r4 = measure_bounds(ComplexityProfile::from_counts(four, 4));
  c.expect(r4.find("constant_growth") && r4.find("constant_growth")->bound == std::optional<long>(2),
           "constant growth 4 gives bound 2");
  BoundsInput regular;
  regular.regular_bispecial = true;
  auto r3 = measure_bounds(ComplexityProfile::from_counts(three, 3), regular);
  c.expect(r3.find("regular_bispecial") && r3.find("regular_bispecial")->bound == std::optional<long>(2),
           "regular bispecial growth 3 gives bound 2");
}

void cross_module(Check& c) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> entry(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t size = 2 + trial % 2;
    std::vector<IntMatrix> levels;
    while (levels.size() < 6) {
      IntMatrix m(size, size);
      for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) m(i, j) = entry(rng);
      bool ok = true;
      for (std::size_t i = 0; i < size; ++i) {
        Integer row = 0, col = 0;
        for (std::size_t j = 0; j < size; ++j) {
          row += m(i, j);
          col += m(j, i);
        }
        ok = ok && row > 0 && col > 0;
      }
      if (ok) levels.push_back(m);
    }
    BratteliDiagram d("random", IntVector(size, Integer(1)), levels);
    const Level m = 4;
    auto rep = count_measures(d, m, 1e-3, 1);
    RatMatrix g = stochastic_oracle(d, 1);
    for (Level k = 2; k <= 1 + m; ++k) g = stochastic_oracle(d, k) * g;
    std::size_t covered = 0;
    for (const auto& cl : rep.clusters) {
      double err = 0;
      for (std::size_t w = 0; w < g.cols(); ++w)
        err = std::max(err, std::fabs(cl.representative[w].get_d() - g(cl.representative_vertex, w).get_d()));
      c.expect(err < 1e-6, "cluster representative matches the transpose-product oracle");
      covered += cl.members.size();
    }
    c.expect(covered == size, "clusters cover every vertex");

    bool ue = false;
    for (auto crit : {UeCriterion::RowDiff, UeCriterion::MinSum, UeCriterion::TauProduct, UeCriterion::PhiSum,
                      UeCriterion::RatioSum, UeCriterion::NormGrowth}) {
      try {
        ue = ue || unique_ergodicity(d, crit, 5, {1, 1 << 14}).proved();
      } catch (const Error&) {
      }
    }
    try {
      auto det = exact_count_determinant(d, 5, true);
      c.expect(!(ue && det.proved() && det.witness["rank"].get<std::size_t>() >= 2), "no contradictory proved verdicts");
    } catch (const Error&) {
    }
  }
}

void numerical_hygiene(Check& c) {
  IntMatrix a(2, 2);
  for (int code = 0; code < 1296; ++code) {
    int x = code;
    for (std::size_t k = 0; k < 4; ++k, x /= 6) a(k / 2, k % 2) = x % 6;
    if ((a(0, 0) == 0 && a(0, 1) == 0) || (a(1, 0) == 0 && a(1, 1) == 0)) continue;
    c.expect(contraction_stats(a).phi == phi_oracle(a), "phi on every 2x2 matrix");
  }
  std::mt19937 rng(10);
  std::uniform_int_distribution<int> entry(0, 5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 3 + trial % 2;
    IntMatrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b(i, j) = entry(rng);
    bool zero_row = false;
    for (std::size_t i = 0; i < n; ++i) zero_row = zero_row || sum(b.row(i)) == 0;
    if (zero_row) continue;
    auto st = contraction_stats(b);
    Rational phi = phi_oracle(b);
    const double s = std::sqrt(phi.get_d());
    c.expect(st.phi == phi, "phi on random 3x3 and 4x4 matrices");
    c.expect(std::fabs(st.tau - (1 - s) / (1 + s)) < 1e-12, "tau from phi");
  }
  auto iv = spectral_radius(IntMatrix{{1, 1}, {1, 1}});
  c.expect(iv.width() < Rational("1/1000000000") && iv.contains(2), "Collatz-Wielandt interval below 1e-9 around 2");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> checks = {
      {"stationary upper-triangular example", stationary_upper_triangular},
      {"pascal binomial measures", pascal_binomial},
      {"two-vertex diagram, linear weight", two_vertex_linear},
      {"two-vertex diagram, quadratic weight", two_vertex_quadratic},
      {"subdiagram thinness and extensions", subdiagram_suite},
      {"countable family", countable_family},
      {"vershik orbits", vershik_orbits},
      {"symbolic complexity", symbolic_suite},
      {"cross-module consistency", cross_module},
      {"numerical hygiene", numerical_hygiene},
  };
  int failed = 0;
  for (const auto& [name, run] : checks) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs <= 10.0, "runtime within 10 s");
    std::printf("%s  %-40s %6.2fs%s\n", c.ok ? "PASS" : "FAIL", name.c_str(), secs, c.failures.str().c_str());
    std::fflush(stdout);
    if (!c.ok) ++failed;
  }
  std::printf("%d of %zu checks passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed ? 1 : 0;
}
