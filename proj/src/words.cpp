#include "bratteli/words.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "bratteli/error.hpp"
#include "bratteli/report.hpp"

namespace bratteli {

namespace {

std::string alphabet_of(const std::string& text) {
  std::set<char> s(text.begin(), text.end());
  return {s.begin(), s.end()};
}

void require_window(const Word& w, std::size_t needed, const char* what) {
  if (needed >= w.size()) {
    throw WindowError(std::string(what) + ": window of length " + std::to_string(w.size()) +
                      " is too short for factors of length " + std::to_string(needed));
  }
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return 0;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den == 0 ? 0 : num / den;
}

// Fills the flags and window estimates from p.
void finalize(ComplexityProfile& prof) {
  const auto& p = prof.p;
  const std::size_t N = prof.max_length();
  prof.periodicity_witness.reset();
  for (std::size_t n = 0; n < N; ++n) {
    if (p[n + 1] <= p[n]) {
      prof.periodicity_witness = n;
      break;
    }
  }
  prof.sturmian = N >= 1;
  for (std::size_t n = 0; n <= N; ++n) {
    if (p[n] != n + 1) prof.sturmian = false;
  }

  const std::size_t lo = std::max<std::size_t>(1, (N + 1) / 2);
  std::vector<double> xs, ys;
  prof.ratio_inf = 0;
  prof.ratio_sup = 0;
  for (std::size_t n = lo; n <= N; ++n) {
    const double r = static_cast<double>(p[n]) / static_cast<double>(n);
    if (xs.empty() || r < prof.ratio_inf) prof.ratio_inf = r;
    if (xs.empty() || r > prof.ratio_sup) prof.ratio_sup = r;
    xs.push_back(static_cast<double>(n));
    ys.push_back(static_cast<double>(p[n]));
  }
  prof.slope = least_squares_slope(xs, ys);

  prof.growth_constant.reset();
  if (N >= 4) {
    const long k = static_cast<long>(p[lo + 1]) - static_cast<long>(p[lo]);
    bool constant = k >= 0;
    for (std::size_t n = lo; n < N && constant; ++n) {
      constant = static_cast<long>(p[n + 1]) - static_cast<long>(p[n]) == k;
    }
    if (constant) prof.growth_constant = static_cast<std::size_t>(k);
  }
}

struct Extensions {
  std::bitset<256> left, right;
};

using ExtensionMap = std::unordered_map<std::string_view, Extensions>;

ExtensionMap extensions(const std::string& text, std::size_t n) {
  ExtensionMap m;
  const std::string_view sv(text);
  for (std::size_t i = 0; i + n <= text.size(); ++i) {
    auto& e = m[sv.substr(i, n)];
    if (i > 0) e.left.set(static_cast<unsigned char>(text[i - 1]));
    if (i + n < text.size()) e.right.set(static_cast<unsigned char>(text[i + n]));
  }
  return m;
}

}  // namespace

SubstitutionRule SubstitutionRule::parse(const std::string& text) {
  SubstitutionRule r;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon != 1 || item.size() < 3) {
      throw SchemaError("substitution entry '" + item + "' must look like a:word");
    }
    const char a = item[0];
    if (r.images.count(a)) throw SchemaError(std::string("letter '") + a + "' is defined twice");
    r.letters.push_back(a);
    r.images[a] = item.substr(2);
  }
  if (r.letters.empty()) throw SchemaError("empty substitution");
  for (const auto& [a, img] : r.images) {
    for (char c : img) {
      if (!r.images.count(c)) {
        throw SchemaError(std::string("image of '") + a + "' uses undefined letter '" + c + "'");
      }
    }
  }
  return r;
}

std::string SubstitutionRule::apply(const std::string& w) const {
  std::string out;
  for (char c : w) {
    auto it = images.find(c);
    if (it == images.end()) throw ArgumentError(std::string("letter '") + c + "' has no image");
    out += it->second;
  }
  return out;
}

std::vector<std::vector<std::size_t>> SubstitutionRule::incidence() const {
  const std::size_t k = letters.size();
  std::vector<std::vector<std::size_t>> m(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < k; ++i) {
    for (char c : images.at(letters[i])) {
      const auto j = static_cast<std::size_t>(std::find(letters.begin(), letters.end(), c) - letters.begin());
      ++m[i][j];
    }
  }
  return m;
}

bool SubstitutionRule::primitive() const {
  const std::size_t k = letters.size();
  std::vector<std::vector<bool>> base(k, std::vector<bool>(k));
  const auto inc = incidence();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) base[i][j] = inc[i][j] > 0;
  auto power = base;
  const std::size_t limit = (k - 1) * (k - 1) + 1;
  for (std::size_t step = 1;; ++step) {
    bool positive = true;
    for (const auto& row : power)
      for (bool b : row) positive = positive && b;
    if (positive) return true;
    if (step >= limit) return false;
    std::vector<std::vector<bool>> next(k, std::vector<bool>(k, false));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t l = 0; l < k; ++l)
        if (power[i][l])
          for (std::size_t j = 0; j < k; ++j)
            if (base[l][j]) next[i][j] = true;
    power = std::move(next);
  }
}

std::string SubstitutionRule::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i) out += ',';
    out += letters[i];
    out += ':';
    out += images.at(letters[i]);
  }
  return out;
}

Word Word::from_text(std::string text, std::string generator) {
  text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }), text.end());
  if (text.empty()) throw SchemaError("empty word");
  Word w;
  w.alphabet = alphabet_of(text);
  w.text = std::move(text);
  w.generator = std::move(generator);
  return w;
}

Word Word::periodic(const std::string& pattern, std::size_t length) {
  if (pattern.empty()) throw ArgumentError("empty period");
  std::string text(length, ' ');
  for (std::size_t i = 0; i < length; ++i) text[i] = pattern[i % pattern.size()];
  return from_text(std::move(text), "periodic:" + pattern);
}

Word generate(const SubstitutionRule& rule, std::size_t length, std::optional<char> start) {
  if (length == 0) throw ArgumentError("length must be positive");
  char a = 0;
  if (start) {
    auto it = rule.images.find(*start);
    if (it == rule.images.end() || it->second.size() < 2 || it->second.front() != *start) {
      throw NotProlongableError(std::string("substitution is not prolongable on '") + *start + "'");
    }
    a = *start;
  } else {
    bool found = false;
    for (char c : rule.letters) {
      const auto& img = rule.images.at(c);
      if (img.size() >= 2 && img.front() == c) {
        a = c;
        found = true;
        break;
      }
    }
    if (!found) throw NotProlongableError("no letter a has τ(a) starting with a and |τ(a)| ≥ 2");
  }
  std::string w(1, a);
  while (w.size() < length) w = rule.apply(w);
  w.resize(length);
  Word out = Word::from_text(std::move(w), "substitution:" + rule.to_string());
  return out;
}

std::vector<std::size_t> factor_counts(const std::string& w, std::size_t max_length) {
  // Suffix automaton; state s accounts for factor lengths (len(link(s)), len(s)].
  std::array<int, 256> index{};
  index.fill(-1);
  std::size_t k = 0;
  for (unsigned char c : w)
    if (index[c] < 0) index[c] = static_cast<int>(k++);
  const std::size_t cap = 2 * w.size() + 2;
  std::vector<int> len(cap, 0), link(cap, -1), next(cap * std::max<std::size_t>(k, 1), -1);
  std::size_t size = 1;
  int last = 0;
  for (unsigned char ch : w) {
    const auto c = static_cast<std::size_t>(index[ch]);
    const int cur = static_cast<int>(size++);
    len[cur] = len[last] + 1;
    int p = last;
    while (p != -1 && next[p * k + c] == -1) {
      next[p * k + c] = cur;
      p = link[p];
    }
    if (p == -1) {
      link[cur] = 0;
    } else {
      const int q = next[p * k + c];
      if (len[p] + 1 == len[q]) {
        link[cur] = q;
      } else {
        const int clone = static_cast<int>(size++);
        len[clone] = len[p] + 1;
        link[clone] = link[q];
        std::copy_n(next.begin() + q * static_cast<long>(k), k, next.begin() + clone * static_cast<long>(k));
        while (p != -1 && next[p * k + c] == q) {
          next[p * k + c] = clone;
          p = link[p];
        }
        link[q] = clone;
        link[cur] = clone;
      }
    }
    last = cur;
  }
  std::vector<long> diff(max_length + 2, 0);
  for (std::size_t s = 1; s < size; ++s) {
    const auto lo = static_cast<std::size_t>(len[link[s]]) + 1;
    const auto hi = std::min(static_cast<std::size_t>(len[s]), max_length);
    if (lo > hi) continue;
    ++diff[lo];
    --diff[hi + 1];
  }
  std::vector<std::size_t> counts(max_length + 1, 0);
  long run = 0;
  for (std::size_t n = 1; n <= max_length; ++n) {
    run += diff[n];
    counts[n] = static_cast<std::size_t>(run);
  }
  counts[0] = 1;
  return counts;
}

std::vector<long> ComplexityProfile::differences() const {
  std::vector<long> d;
  for (std::size_t n = 0; n + 1 < p.size(); ++n) d.push_back(static_cast<long>(p[n + 1]) - static_cast<long>(p[n]));
  return d;
}

std::vector<double> ComplexityProfile::entropy() const {
  std::vector<double> e;
  for (std::size_t n = 1; n < p.size(); ++n) e.push_back(std::log(static_cast<double>(p[n])) / static_cast<double>(n));
  return e;
}

double ComplexityProfile::liminf_estimate() const { return growth_constant ? slope : ratio_inf; }
double ComplexityProfile::limsup_estimate() const { return growth_constant ? slope : ratio_sup; }

bool ComplexityProfile::subadditive() const {
  for (std::size_t m = 1; m < p.size(); ++m)
    for (std::size_t n = 1; m + n < p.size(); ++n)
      if (p[m + n] > p[m] * p[n]) return false;
  return true;
}

std::string ComplexityProfile::to_csv() const {
  std::ostringstream os;
  os << "n,p,dp,entropy\n";
  const auto d = differences();
  const auto e = entropy();
  for (std::size_t n = 1; n < p.size(); ++n) {
    os << n << ',' << p[n] << ',';
    if (n < d.size()) os << d[n];
    os << ',' << float_json(e[n - 1]).dump() << '\n';
  }
  return os.str();
}

nlohmann::json ComplexityProfile::to_json() const {
  nlohmann::json j;
  j["max_length"] = max_length();
  j["window"] = window;
  j["alphabet_size"] = alphabet_size;
  j["p"] = p;
  j["differences"] = differences();
  j["entropy"] = float_array(entropy());
  j["lower_bound_note"] = "counts are factors seen in the window";
  j["ultimately_periodic"] = ultimately_periodic();
  j["periodicity_witness"] = periodicity_witness ? nlohmann::json(*periodicity_witness) : nlohmann::json(nullptr);
  j["sturmian"] = sturmian;
  j["growth_constant"] = growth_constant ? nlohmann::json(*growth_constant) : nlohmann::json(nullptr);
  j["slope"] = float_json(slope);
  j["ratio_inf"] = float_json(ratio_inf);
  j["ratio_sup"] = float_json(ratio_sup);
  j["liminf_estimate"] = float_json(liminf_estimate());
  j["limsup_estimate"] = float_json(limsup_estimate());
  j["subadditive"] = subadditive();
  j["recurrence_estimate"] = recurrence_estimate ? float_json(*recurrence_estimate) : nlohmann::json(nullptr);
  return j;
}

ComplexityProfile ComplexityProfile::from_counts(const std::vector<std::size_t>& counts, std::size_t alphabet_size) {
  if (counts.empty()) throw ArgumentError("no counts given");
  ComplexityProfile prof;
  prof.p.push_back(1);
  prof.p.insert(prof.p.end(), counts.begin(), counts.end());
  prof.alphabet_size = alphabet_size;
  finalize(prof);
  return prof;
}

ComplexityProfile complexity_profile(const Word& w, std::size_t max_length) {
  if (max_length == 0) throw ArgumentError("maximal factor length must be positive");
  require_window(w, max_length, "complexity profile");
  ComplexityProfile prof;
  prof.p = factor_counts(w.text, max_length);
  prof.alphabet_size = w.alphabet.size();
  prof.window = w.size();
  finalize(prof);
  const std::size_t rec = std::min<std::size_t>(max_length, 8);
  const double est = recurrence_estimate(w, rec);
  if (est > 0) prof.recurrence_estimate = est;
  return prof;
}

nlohmann::json SpecialFactors::to_json() const {
  nlohmann::json j;
  j["max_length"] = max_length;
  auto rows = nlohmann::json::array();
  for (std::size_t n = 0; n <= max_length; ++n) {
    rows.push_back({{"length", n}, {"left", left[n]}, {"right", right[n]}, {"bispecial", bispecial[n]}});
  }
  j["lengths"] = rows;
  j["irregular_bispecial"] = irregular;
  j["regular"] = regular;
  return j;
}

SpecialFactors special_factors(const Word& w, std::size_t max_length) {
  require_window(w, max_length + 2, "special factors");
  SpecialFactors out;
  out.max_length = max_length;
  out.left.resize(max_length + 1);
  out.right.resize(max_length + 1);
  out.bispecial.resize(max_length + 1);
  ExtensionMap current = extensions(w.text, 0);
  for (std::size_t n = 0; n <= max_length; ++n) {
    ExtensionMap longer = extensions(w.text, n + 1);
    std::vector<std::string_view> keys;
    for (const auto& [f, e] : current) keys.push_back(f);
    std::sort(keys.begin(), keys.end());
    for (auto f : keys) {
      const auto& e = current.at(f);
      const bool ls = e.left.count() >= 2, rs = e.right.count() >= 2;
      if (ls) out.left[n].emplace_back(f);
      if (rs) out.right[n].emplace_back(f);
      if (!(ls && rs)) continue;
      out.bispecial[n].emplace_back(f);
      std::size_t left_rs = 0, right_ls = 0;
      for (std::size_t c = 0; c < 256; ++c) {
        const char ch = static_cast<char>(c);
        if (e.left.test(c)) {
          auto it = longer.find(std::string_view(std::string(1, ch) + std::string(f)));
          if (it != longer.end() && it->second.right.count() >= 2) ++left_rs;
        }
        if (e.right.test(c)) {
          auto it = longer.find(std::string_view(std::string(f) + ch));
          if (it != longer.end() && it->second.left.count() >= 2) ++right_ls;
        }
      }
      if (left_rs != 1 || right_ls != 1) {
        out.irregular.emplace_back(f);
        if (2 * n >= max_length) out.regular = false;
      }
    }
    current = std::move(longer);
  }
  return out;
}

nlohmann::json ReturnWords::to_json() const {
  return {{"factor", factor}, {"occurrences", occurrences}, {"return_words", words}, {"ratio", float_json(ratio)}};
}

ReturnWords return_words(const Word& w, const std::string& u) {
  if (u.empty()) throw ArgumentError("empty factor");
  std::vector<std::size_t> pos;
  for (auto i = w.text.find(u); i != std::string::npos; i = w.text.find(u, i + 1)) pos.push_back(i);
  if (pos.size() < 3) {
    throw RarityError("factor '" + u + "' occurs " + std::to_string(pos.size()) + " times; at least 3 are needed");
  }
  ReturnWords r;
  r.factor = u;
  r.occurrences = pos.size();
  std::set<std::pair<std::size_t, std::string>> seen;
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
    std::string rw = w.text.substr(pos[i], pos[i + 1] - pos[i]);
    seen.emplace(rw.size(), std::move(rw));
  }
  std::size_t longest = 0;
  for (const auto& [len, rw] : seen) {
    r.words.push_back(rw);
    longest = std::max(longest, len);
  }
  r.ratio = static_cast<double>(longest) / static_cast<double>(u.size());
  return r;
}

double recurrence_estimate(const Word& w, std::size_t max_length) {
  struct Track {
    std::size_t last = 0, count = 0, gap = 0;
  };
  double best = 0;
  const std::string_view sv(w.text);
  for (std::size_t n = 1; n <= max_length && n < w.size(); ++n) {
    std::unordered_map<std::string_view, Track> seen;
    for (std::size_t i = 0; i + n <= w.size(); ++i) {
      auto& t = seen[sv.substr(i, n)];
      if (t.count > 0) t.gap = std::max(t.gap, i - t.last);
      t.last = i;
      ++t.count;
    }
    for (const auto& [f, t] : seen) {
      if (t.count >= 3) best = std::max(best, static_cast<double>(t.gap) / static_cast<double>(n));
    }
  }
  return best;
}

std::vector<double> min_frequencies(const Word& w, std::size_t max_length) {
  require_window(w, max_length, "frequencies");
  std::vector<double> out;
  const std::string_view sv(w.text);
  for (std::size_t n = 1; n <= max_length; ++n) {
    std::unordered_map<std::string_view, std::size_t> count;
    const std::size_t total = w.size() - n + 1;
    for (std::size_t i = 0; i < total; ++i) ++count[sv.substr(i, n)];
    std::size_t least = total;
    for (const auto& [f, c] : count) least = std::min(least, c);
    out.push_back(static_cast<double>(least) / static_cast<double>(total));
  }
  return out;
}

nlohmann::json BoundEntry::to_json() const {
  return {{"name", name},
          {"hypothesis", hypothesis},
          {"applies", applies},
          {"bound", bound ? nlohmann::json(*bound) : nlohmann::json(nullptr)},
          {"verdict", verdict.to_json()}};
}

const BoundEntry* BoundsReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

nlohmann::json BoundsReport::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& e : entries) arr.push_back(e.to_json());
  j["bounds"] = arr;
  j["ergodic_count_bound"] = best_bound ? nlohmann::json(*best_bound) : nlohmann::json(nullptr);
  j["uniquely_ergodic_evidence"] = ue_evidence;
  j["n_epsilon"] = float_array(n_epsilon);
  j["assumption"] = "bounds assume the word generates a minimal subshift";
  return j;
}

BoundsReport measure_bounds(const ComplexityProfile& profile, const BoundsInput& input) {
  BoundsReport rep;
  const double lo = profile.liminf_estimate();
  const double hi = profile.limsup_estimate();
  const Level depth = profile.max_length();

  auto add = [&](std::string name, std::string hypothesis, bool applies, std::optional<long> bound,
                 std::string direction, bool ergodic) {
    BoundEntry e;
    e.name = std::move(name);
    e.hypothesis = std::move(hypothesis);
    e.applies = applies;
    e.verdict.criterion = e.name;
    e.verdict.depth = depth;
    e.verdict.status = applies ? Status::Evidence : Status::Inconclusive;
    e.verdict.witness = {{"liminf_estimate", float_json(lo)}, {"limsup_estimate", float_json(hi)}};
    if (applies) {
      e.bound = bound;
      e.verdict.direction = std::move(direction);
      if (ergodic && bound && (!rep.best_bound || *bound < *rep.best_bound)) rep.best_bound = bound;
    }
    rep.entries.push_back(std::move(e));
  };

  const bool ue = hi < 3 || lo < 2;
  add("linear_complexity_ue", "limsup p(n)/n < 3 or liminf p(n)/n < 2", ue, 1, "uniquely ergodic", true);
  rep.ue_evidence = ue;

  const long lo_int = static_cast<long>(std::floor(lo));
  add("liminf_integer_part", "liminf p(n)/n = a gives at most [a] ergodic measures", lo_int >= 1, lo_int,
      "at most " + std::to_string(lo_int) + " ergodic measures", true);

  const long hi_int = static_cast<long>(std::floor(hi));
  add("limsup_integer_part", "limsup p(n)/n = a with a >= 2 gives at most [a] - 1", hi >= 2, hi_int - 1,
      "at most " + std::to_string(hi_int - 1) + " ergodic measures", true);

  const long K = hi_int + 1;
  add("limsup_below_integer", "limsup p(n)/n < K with K >= 3 gives at most K - 2", K >= 3, K - 2,
      "at most " + std::to_string(K - 2) + " ergodic measures", true);

  const long g = profile.growth_constant ? static_cast<long>(*profile.growth_constant) : -1;
  add("constant_growth", "p(n+1) - p(n) = K eventually with K >= 4 gives at most K - 2", g >= 4, g - 2,
      "at most " + std::to_string(g - 2) + " ergodic measures", true);

  const bool regular = input.regular_bispecial.value_or(false) && g >= 1;
  add("regular_bispecial", "regular bispecial condition with growth K gives at most (K+1)/2", regular,
      (g + 1) / 2, "at most " + std::to_string((g + 1) / 2) + " ergodic measures", true);

  const long Kl = static_cast<long>(std::floor(lo)) + 1;
  add("generic_liminf", "liminf p(n)/n < K gives at most K - 1 non-atomic generic measures", Kl >= 1, Kl - 1,
      "at most " + std::to_string(Kl - 1) + " non-atomic generic measures", false);
  add("generic_limsup",
      "limsup p(n)/n < K and a generic point with non-uniquely-ergodic orbit closure gives at most K - 2 "
      "non-atomic generic measures",
      K >= 2, K - 2, "at most " + std::to_string(K - 2) + " non-atomic generic measures", false);

  if (!input.min_frequencies.empty()) {
    for (std::size_t n = 0; n < input.min_frequencies.size(); ++n) {
      rep.n_epsilon.push_back(static_cast<double>(n + 1) * input.min_frequencies[n]);
    }
    BoundEntry e;
    e.name = "frequency_test";
    e.hypothesis = "limsup n eps(n) > 0 gives unique ergodicity";
    e.verdict.criterion = e.name;
    e.verdict.depth = depth;
    e.verdict.trace = rep.n_epsilon;
    double slope = 0;
    classify_summands(rep.n_epsilon, &slope);
    const std::size_t half = rep.n_epsilon.size() / 2;
    const double tail_min = *std::min_element(rep.n_epsilon.begin() + static_cast<long>(half), rep.n_epsilon.end());
    e.verdict.witness = {{"tail_min", float_json(tail_min)}, {"log_slope", float_json(slope)}};
    if (tail_min > 0 && slope > -0.5) {
      e.applies = true;
      e.bound = 1;
      e.verdict.status = Status::Evidence;
      e.verdict.direction = "uniquely ergodic";
      if (!rep.best_bound || *rep.best_bound > 1) rep.best_bound = 1;
      rep.ue_evidence = true;
    } else {
      e.verdict.status = Status::Inconclusive;
      e.verdict.note = "n eps(n) appears to tend to zero, which does not decide unique ergodicity";
    }
    rep.entries.push_back(std::move(e));
  }

  if (input.interval_count) {
    const long d = *input.interval_count;
    add("interval_exchange", "minimal exchange of d intervals has at most [d/2] ergodic measures", d >= 2, d / 2,
        "at most " + std::to_string(d / 2) + " ergodic measures", true);
  }
  return rep;
}

}  // namespace bratteli
