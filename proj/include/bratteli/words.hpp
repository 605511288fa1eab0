#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bratteli/verdict.hpp"

namespace bratteli {

struct SubstitutionRule {
  // Letters in declaration order.
  std::vector<char> letters;
  std::map<char, std::string> images;

  // "a:ab,b:a"; throws SchemaError.
  static SubstitutionRule parse(const std::string& text);
  std::string apply(const std::string& w) const;
  // Row a, column b: occurrences of b in τ(a).
  std::vector<std::vector<std::size_t>> incidence() const;
  bool primitive() const;
  std::string to_string() const;
};

// Finite prefix of an infinite sequence together with how it was produced.
struct Word {
  std::string text;
  std::string alphabet;
  std::string generator;

  static Word from_text(std::string text, std::string generator = "explicit");
  static Word periodic(const std::string& pattern, std::size_t length);
  std::size_t size() const { return text.size(); }
};

// Fixed point of τ starting with `start` (default: first prolongable letter).
// Throws NotProlongableError.
Word generate(const SubstitutionRule& rule, std::size_t length, std::optional<char> start = std::nullopt);

// Distinct factors of `w` of each length 1..max_length via a suffix automaton.
std::vector<std::size_t> factor_counts(const std::string& w, std::size_t max_length);

struct ComplexityProfile {
  // p[n] for n = 0..N; counts in the window, so lower bounds for the true p(n).
  std::vector<std::size_t> p;
  std::size_t alphabet_size = 0;
  std::size_t window = 0;
  // Smallest n with p(n+1) = p(n).
  std::optional<std::size_t> periodicity_witness;
  bool sturmian = false;
  // Δp constant over the top half of the window.
  std::optional<std::size_t> growth_constant;
  double slope = 0;
  double ratio_inf = 0;
  double ratio_sup = 0;
  std::optional<double> recurrence_estimate;

  std::size_t max_length() const { return p.empty() ? 0 : p.size() - 1; }
  bool ultimately_periodic() const { return periodicity_witness.has_value(); }
  std::vector<long> differences() const;
  std::vector<double> entropy() const;
  // Estimates of liminf/limsup p(n)/n.
  double liminf_estimate() const;
  double limsup_estimate() const;
  bool subadditive() const;
  std::string to_csv() const;
  nlohmann::json to_json() const;

  // Profile from given counts p(1..N), for synthetic inputs.
  static ComplexityProfile from_counts(const std::vector<std::size_t>& counts, std::size_t alphabet_size);
};

// Throws WindowError when max_length >= |w|.
ComplexityProfile complexity_profile(const Word& w, std::size_t max_length);

struct SpecialFactors {
  std::size_t max_length = 0;
  // Index n holds the factors of length n (n = 0..N).
  std::vector<std::vector<std::string>> left, right, bispecial;
  std::vector<std::string> irregular;
  // Every bispecial factor of length ≥ N/2 is regular.
  bool regular = true;

  nlohmann::json to_json() const;
};

// Throws WindowError when max_length + 2 >= |w|.
SpecialFactors special_factors(const Word& w, std::size_t max_length);

struct ReturnWords {
  std::string factor;
  std::size_t occurrences = 0;
  std::vector<std::string> words;
  double ratio = 0;  // max |r| / |u|

  nlohmann::json to_json() const;
};

// Throws RarityError when u occurs fewer than 3 times.
ReturnWords return_words(const Word& w, const std::string& u);
// max |r|/|u| over factors of lengths 1..max_length that occur at least 3 times.
double recurrence_estimate(const Word& w, std::size_t max_length);

// min over factors of length n of their window frequency, n = 1..N.
std::vector<double> min_frequencies(const Word& w, std::size_t max_length);

struct BoundEntry {
  std::string name;
  std::string hypothesis;
  bool applies = false;
  std::optional<long> bound;
  Verdict verdict;

  nlohmann::json to_json() const;
};

struct BoundsInput {
  std::optional<bool> regular_bispecial;
  std::vector<double> min_frequencies;
  std::optional<long> interval_count;
};

struct BoundsReport {
  std::vector<BoundEntry> entries;
  std::optional<long> best_bound;
  bool ue_evidence = false;
  std::vector<double> n_epsilon;

  const BoundEntry* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

BoundsReport measure_bounds(const ComplexityProfile& profile, const BoundsInput& input = {});

}  // namespace bratteli
