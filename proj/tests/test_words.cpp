#include <doctest.h>

#include <algorithm>
#include <set>

#include "bratteli/words.hpp"

using namespace bratteli;

namespace {

std::set<std::string> factors_of(const std::string& w, std::size_t n) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out.insert(w.substr(i, n));
  return out;
}

std::set<char> letters(const std::string& w) { return {w.begin(), w.end()}; }

// Left/right/bispecial factors of length n by direct extension counting.
struct SpecialOracle {
  std::vector<std::string> left, right, bispecial;
};

SpecialOracle special_oracle(const std::string& w, std::size_t n) {
  SpecialOracle o;
  auto longer = factors_of(w, n + 1);
  for (const auto& u : factors_of(w, n)) {
    int l = 0, r = 0;
    for (char a : letters(w)) {
      l += longer.count(std::string(1, a) + u) ? 1 : 0;
      r += longer.count(u + std::string(1, a)) ? 1 : 0;
    }
    if (l >= 2) o.left.push_back(u);
    if (r >= 2) o.right.push_back(u);
    if (l >= 2 && r >= 2) o.bispecial.push_back(u);
  }
  return o;
}

std::vector<std::string> return_oracle(const std::string& w, const std::string& u) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i + u.size() <= w.size(); ++i)
    if (w.compare(i, u.size(), u) == 0) pos.push_back(i);
  std::set<std::string> words;
  for (std::size_t k = 0; k + 1 < pos.size(); ++k) words.insert(w.substr(pos[k], pos[k + 1] - pos[k]));
  std::vector<std::string> out(words.begin(), words.end());
  std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

const auto fibonacci_rule = SubstitutionRule::parse("a:ab,b:a");
const auto thue_morse_rule = SubstitutionRule::parse("a:ab,b:ba");

}  // namespace

TEST_CASE("fixed points of standard substitutions") {
  CHECK(generate(fibonacci_rule, 13).text == "abaababaabaab");
  CHECK(generate(thue_morse_rule, 8).text == "abbabaab");
  CHECK(fibonacci_rule.primitive());
  CHECK_FALSE(SubstitutionRule::parse("a:ab,b:b").primitive());
  CHECK_THROWS_AS(generate(SubstitutionRule::parse("a:b,b:a"), 10), NotProlongableError);
  CHECK_THROWS(SubstitutionRule::parse("a:"));
}

TEST_CASE("factor counts agree with brute-force substring sets") {
  for (const auto& w : {generate(fibonacci_rule, 3000), generate(thue_morse_rule, 3000), Word::periodic("aabab", 500),
                        Word::from_text("abcabbacbbcaacbacbbbcaaabcc")}) {
    auto counts = factor_counts(w.text, 12);
    for (std::size_t n = 1; n <= 12 && n < w.size(); ++n) CHECK(counts[n] == factors_of(w.text, n).size());
  }
}

TEST_CASE("the fibonacci word is sturmian on a long window") {
  auto w = generate(fibonacci_rule, 100000);
  auto p = complexity_profile(w, 200);
  for (std::size_t n = 0; n <= 200; ++n) CHECK(p.p[n] == n + 1);
  CHECK_FALSE(p.ultimately_periodic());
  CHECK(p.sturmian);
  CHECK(p.subadditive());
  for (std::size_t m = 1; m <= 20; ++m)
    for (std::size_t n = 1; n <= 20; ++n) CHECK(p.p[m + n] <= p.p[m] * p.p[n]);
  CHECK_THROWS_AS(complexity_profile(Word::from_text("abab"), 4), WindowError);
}

TEST_CASE("periodic words trigger the stationarity witness") {
  auto p = complexity_profile(Word::periodic("abaab", 600), 50);
  REQUIRE(p.periodicity_witness.has_value());
  CHECK(p.p[*p.periodicity_witness] == p.p[*p.periodicity_witness + 1]);
  for (std::size_t n = 4; n <= 50; ++n) CHECK(p.p[n] == 5);
  CHECK(p.subadditive());
}

TEST_CASE("special factors agree with extension counting") {
  auto w = generate(thue_morse_rule, 4000);
  auto sf = special_factors(w, 12);
  for (std::size_t n = 0; n <= 12; ++n) {
    auto o = special_oracle(w.text, n);
    CHECK(sorted(sf.left[n]) == o.left);
    CHECK(sorted(sf.right[n]) == o.right);
    CHECK(sorted(sf.bispecial[n]) == o.bispecial);
  }
  auto fib = special_factors(generate(fibonacci_rule, 4000), 20);
  for (std::size_t n = 0; n <= 20; ++n) {
    CHECK(fib.left[n].size() == 1);
    CHECK(fib.right[n].size() == 1);
  }
  CHECK(fib.regular);
}

TEST_CASE("return words") {
  auto w = generate(fibonacci_rule, 5000);
  auto ra = return_words(w, "a");
  CHECK(ra.words == std::vector<std::string>{"a", "ab"});
  auto rb = return_words(w, "b");
  CHECK(rb.words == std::vector<std::string>{"ba", "baa"});
  CHECK(rb.ratio == doctest::Approx(3));
  for (const std::string u : {"aba", "abaab", "baab"}) CHECK(return_words(w, u).words == return_oracle(w.text, u));
  CHECK(recurrence_estimate(w, 30) <= 3 + 1e-12);
  CHECK_THROWS_AS(return_words(Word::from_text("abcab"), "c"), RarityError);
}

TEST_CASE("the substitution language is factorial and closed under the substitution") {
  auto w = generate(thue_morse_rule, 20000);
  std::string image = thue_morse_rule.apply(w.text.substr(0, 300));
  for (std::size_t n = 1; n <= 10; ++n) {
    auto lang = factors_of(w.text, n);
    for (const auto& u : factors_of(image, n)) CHECK(lang.count(u) == 1);
    for (const auto& u : factors_of(w.text, n + 1)) {
      CHECK(lang.count(u.substr(1)) == 1);
      CHECK(lang.count(u.substr(0, n)) == 1);
    }
  }
}

TEST_CASE("bounds report on the fibonacci word") {
  auto w = generate(fibonacci_rule, 50000);
  auto profile = complexity_profile(w, 60);
  BoundsInput in;
  in.regular_bispecial = special_factors(w, 30).regular;
  in.min_frequencies = min_frequencies(w, 60);
  auto rep = measure_bounds(profile, in);
  CHECK(rep.ue_evidence);
  CHECK(rep.best_bound == std::optional<long>(1));
  REQUIRE(rep.find("frequency_test"));
  CHECK(rep.find("frequency_test")->verdict.status == Status::Evidence);
}

TEST_CASE("synthetic profiles with eventually constant growth") {
  std::vector<std::size_t> four, three;
  for (std::size_t n = 1; n <= 200; ++n) {
    four.push_back(4 * n + 3);
    three.push_back(3 * n + 1);
  }
  auto p4 = ComplexityProfile::from_counts(four, 4);
  CHECK(p4.growth_constant == std::optional<std::size_t>(4));
  auto r4 = measure_bounds(p4);
  REQUIRE(r4.find("constant_growth"));
  CHECK(r4.find("constant_growth")->applies);
  CHECK(r4.find("constant_growth")->bound == std::optional<long>(2));
  CHECK(r4.best_bound == std::optional<long>(2));

  BoundsInput regular;
  regular.regular_bispecial = true;
  auto r3 = measure_bounds(ComplexityProfile::from_counts(three, 3), regular);
  REQUIRE(r3.find("regular_bispecial"));
  CHECK(r3.find("regular_bispecial")->applies);
  CHECK(r3.find("regular_bispecial")->bound == std::optional<long>(2));
  CHECK(r3.best_bound == std::optional<long>(2));
}

TEST_CASE("interval exchange bound") {
  BoundsInput in;
  in.interval_count = 6;
  std::vector<std::size_t> counts;
  for (std::size_t n = 1; n <= 100; ++n) counts.push_back(5 * n + 1);
  auto rep = measure_bounds(ComplexityProfile::from_counts(counts, 6), in);
  REQUIRE(rep.find("interval_exchange"));
  CHECK(rep.find("interval_exchange")->bound == std::optional<long>(3));
}

TEST_CASE("profile serialization") {
  auto p = complexity_profile(generate(fibonacci_rule, 1000), 5);
  std::string csv = p.to_csv();
  CHECK(csv.rfind("n,p,dp,entropy\n", 0) == 0);
  CHECK(csv.find("\n3,4,1,") != std::string::npos);
  CHECK(p.to_json()["p"][4] == 5);
}
