#include "bratteli/vershik.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bratteli/report.hpp"

namespace bratteli {

namespace {

std::size_t small(const Integer& x) {
  if (x < 0 || x > 1000000000) throw ArgumentError("edge multiplicity too large to enumerate: " + to_string(x));
  return x.get_ui();
}

// Incidence data and edge positions for levels 1..depth.
class Orders {
 public:
  Orders(const BratteliDiagram& d, const EdgeOrder& o) : d_(d), o_(o) {}

  const IntMatrix& matrix(Level n) {
    if (n == 0) throw ArgumentError("edges start at level 1");
    while (inc_.size() < n) inc_.push_back(d_.incidence(inc_.size()));
    return inc_[n - 1];
  }

  std::size_t count(Level n, std::size_t v) {
    const IntMatrix& f = matrix(n);
    if (v >= f.rows()) throw ArgumentError("vertex " + std::to_string(v) + " does not exist at level " + std::to_string(n));
    std::size_t c = 0;
    for (std::size_t w = 0; w < f.cols(); ++w) c += small(f(v, w));
    return c;
  }

  // Consecutive index -> order position and back.
  std::size_t to_position(Level n, std::size_t v, std::size_t c) {
    switch (o_.scheme) {
      case EdgeOrder::Scheme::Consecutive: return c;
      case EdgeOrder::Scheme::Reverse: return count(n, v) - 1 - c;
      case EdgeOrder::Scheme::Explicit: {
        const auto* perm = permutation(n, v);
        if (!perm) return c;
        return static_cast<std::size_t>(std::find(perm->begin(), perm->end(), c) - perm->begin());
      }
    }
    return c;
  }

  std::size_t from_position(Level n, std::size_t v, std::size_t p) {
    switch (o_.scheme) {
      case EdgeOrder::Scheme::Consecutive: return p;
      case EdgeOrder::Scheme::Reverse: return count(n, v) - 1 - p;
      case EdgeOrder::Scheme::Explicit: {
        const auto* perm = permutation(n, v);
        return perm ? (*perm)[p] : p;
      }
    }
    return p;
  }

  std::size_t position(Level n, const PathEdge& e) {
    const IntMatrix& f = matrix(n);
    std::size_t c = e.slot;
    for (std::size_t w = 0; w < e.source; ++w) c += small(f(e.target, w));
    return to_position(n, e.target, c);
  }

  PathEdge at(Level n, std::size_t v, std::size_t p) {
    const IntMatrix& f = matrix(n);
    std::size_t c = from_position(n, v, p);
    for (std::size_t w = 0; w < f.cols(); ++w) {
      std::size_t m = small(f(v, w));
      if (c < m) return {w, v, c};
      c -= m;
    }
    throw ArgumentError("edge position out of range");
  }

  FinitePath extremal(Level n, std::size_t v, bool maximal) {
    FinitePath p(n);
    for (Level k = n; k >= 1; --k) {
      std::size_t cnt = count(k, v);
      p[k - 1] = at(k, v, maximal ? cnt - 1 : 0);
      v = p[k - 1].source;
    }
    return p;
  }

  std::optional<FinitePath> next(const FinitePath& path) {
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Level n = k + 1;
      std::size_t pos = position(n, path[k]);
      if (pos + 1 < count(n, path[k].target)) {
        FinitePath out = path;
        out[k] = at(n, path[k].target, pos + 1);
        if (k > 0) {
          FinitePath low = extremal(k, out[k].source, false);
          std::copy(low.begin(), low.end(), out.begin());
        }
        return out;
      }
    }
    return std::nullopt;
  }

 private:
  const std::vector<std::size_t>* permutation(Level n, std::size_t v) {
    if (n > o_.data.size() || v >= o_.data[n - 1].size()) return nullptr;
    const auto& perm = o_.data[n - 1][v];
    std::size_t cnt = count(n, v);
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i || sorted.size() != cnt)
        throw SchemaError("explicit order at level " + std::to_string(n) + " vertex " + std::to_string(v) +
                          " is not a permutation of its " + std::to_string(cnt) + " incoming edges");
    return &perm;
  }

  const BratteliDiagram& d_;
  const EdgeOrder& o_;
  std::vector<IntMatrix> inc_;
};

std::vector<std::size_t> key(const FinitePath& p) {
  std::vector<std::size_t> k;
  for (const auto& e : p) k.insert(k.end(), {e.source, e.target, e.slot});
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------

EdgeOrder EdgeOrder::from_json(const nlohmann::json& j) {
  if (j.is_null()) return consecutive();
  if (!j.is_object() || !j.contains("scheme") || !j["scheme"].is_string())
    throw SchemaError("order needs a 'scheme' of consecutive, reverse or explicit");
  const std::string s = j["scheme"];
  if (s == "consecutive") return consecutive();
  if (s == "reverse") return reverse();
  if (s != "explicit") throw SchemaError("unknown order scheme '" + s + "'");
  EdgeOrder o;
  o.scheme = Scheme::Explicit;
  try {
    o.data = j.at("data").get<std::vector<std::vector<std::vector<std::size_t>>>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("explicit order data must be per-level, per-vertex permutations: ") + e.what());
  }
  return o;
}

EdgeOrder EdgeOrder::of(const BratteliDiagram& d) { return from_json(d.order()); }

nlohmann::json EdgeOrder::to_json() const {
  switch (scheme) {
    case Scheme::Consecutive: return {{"scheme", "consecutive"}};
    case Scheme::Reverse: return {{"scheme", "reverse"}};
    case Scheme::Explicit: return {{"scheme", "explicit"}, {"data", data}};
  }
  return nullptr;
}

std::vector<PathEdge> EdgeOrder::incoming(const BratteliDiagram& d, Level n, std::size_t v) const {
  Orders ord(d, *this);
  std::vector<PathEdge> out;
  const std::size_t cnt = ord.count(n, v);
  for (std::size_t p = 0; p < cnt; ++p) out.push_back(ord.at(n, v, p));
  return out;
}

FinitePath minimal_path(const BratteliDiagram& d, const EdgeOrder& o, Level n, std::size_t v) {
  Orders ord(d, o);
  return ord.extremal(n, v, false);
}

FinitePath maximal_path(const BratteliDiagram& d, const EdgeOrder& o, Level n, std::size_t v) {
  Orders ord(d, o);
  return ord.extremal(n, v, true);
}

bool is_maximal(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p) {
  Orders ord(d, o);
  for (std::size_t k = 0; k < p.size(); ++k)
    if (ord.position(k + 1, p[k]) + 1 != ord.count(k + 1, p[k].target)) return false;
  return true;
}

bool is_minimal(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p) {
  Orders ord(d, o);
  for (std::size_t k = 0; k < p.size(); ++k)
    if (ord.position(k + 1, p[k]) != 0) return false;
  return true;
}

ExtremalPaths extremal_paths(const BratteliDiagram& d, const EdgeOrder& o, Level depth, Level horizon) {
  if (depth == 0) throw ArgumentError("depth must be positive");
  if (depth > d.max_level()) throw DepthError("diagram ends before level " + std::to_string(depth), depth);
  if (horizon == 0) horizon = std::min<Level>(2 * depth, d.max_level());
  horizon = std::max(horizon, depth);
  if (horizon > d.max_level()) throw DepthError("diagram ends before level " + std::to_string(horizon), horizon);
  Orders ord(d, o);
  ExtremalPaths out;
  out.depth = depth;
  out.horizon = horizon;
  for (int m = 0; m < 2; ++m) {
    std::set<std::vector<std::size_t>> seen;
    auto& dst = m == 0 ? out.maximal : out.minimal;
    for (std::size_t v = 0; v < d.level_size(horizon); ++v) {
      FinitePath p = ord.extremal(horizon, v, m == 0);
      p.resize(depth);
      if (seen.insert(key(p)).second) dst.push_back(std::move(p));
    }
  }
  if (auto rank = d.bounded_rank(horizon)) out.within_rank = out.maximal.size() <= *rank && out.minimal.size() <= *rank;
  return out;
}

FinitePath successor(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p) {
  validate_path(d, p);
  Orders ord(d, o);
  auto next = ord.next(p);
  if (!next) throw MaximalPathError("path is maximal; the successor wraps to a minimal path");
  return *next;
}

FinitePath truncated_step(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p, bool* wrapped) {
  validate_path(d, p);
  Orders ord(d, o);
  auto next = ord.next(p);
  if (wrapped) *wrapped = !next;
  if (next) return *next;
  const Level n = p.size();
  return ord.extremal(n, (p.back().target + 1) % d.level_size(n), false);
}

std::vector<FinitePath> level_one_cylinders(const BratteliDiagram& d) {
  std::vector<FinitePath> out;
  const IntVector& root = d.root_edges();
  for (std::size_t v = 0; v < root.size(); ++v)
    for (std::size_t s = 0; s < small(root[v]); ++s) out.push_back({PathEdge{0, v, s}});
  return out;
}

OrbitStats orbit_frequencies(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& start, std::size_t steps,
                             const std::vector<FinitePath>& cylinders, std::size_t window) {
  if (start.empty()) throw ArgumentError("orbit needs a non-empty starting path");
  validate_path(d, start);
  for (const auto& c : cylinders)
    if (c.empty() || c.size() > start.size()) throw ArgumentError("cylinder length must be between 1 and the path length");
  Orders ord(d, o);
  OrbitStats st;
  st.steps = steps;
  st.cylinders = cylinders;
  st.visits.assign(cylinders.size(), 0);
  FinitePath x = start;
  const Level n = start.size();
  const std::size_t top = d.level_size(n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < cylinders.size(); ++i)
      if (std::equal(cylinders[i].begin(), cylinders[i].end(), x.begin())) ++st.visits[i];
    if (window && (t + 1) % window == 0) {
      std::vector<double> f;
      for (auto c : st.visits) f.push_back(static_cast<double>(c) / static_cast<double>(t + 1));
      st.window_steps.push_back(t + 1);
      st.window_frequencies.push_back(std::move(f));
    }
    if (auto next = ord.next(x)) {
      x = std::move(*next);
    } else {
      ++st.wraps;
      x = ord.extremal(n, (x.back().target + 1) % top, false);
    }
  }
  for (auto c : st.visits)
    st.frequencies.push_back(steps ? Rational(Integer(static_cast<unsigned long>(c)), Integer(static_cast<unsigned long>(steps))) : Rational(0));
  for (auto& f : st.frequencies) f.canonicalize();
  return st;
}

nlohmann::json OrbitStats::to_json() const {
  nlohmann::json cyl = nlohmann::json::array();
  for (const auto& c : cylinders) cyl.push_back(path_json(c));
  nlohmann::json freqs = nlohmann::json::array();
  for (const auto& f : frequencies) freqs.push_back(to_double(f));
  return {{"steps", steps},
          {"wraps", wraps},
          {"cylinders", cyl},
          {"visits", visits},
          {"frequencies", rational_array(frequencies)},
          {"frequencies_float", float_array(std::vector<double>(freqs.begin(), freqs.end()))}};
}

std::string OrbitStats::to_csv() const {
  std::ostringstream os;
  os << "step";
  for (std::size_t i = 0; i < cylinders.size(); ++i) os << ",cyl" << i;
  os << "\n";
  auto row = [&](std::size_t step, const std::vector<double>& f) {
    os << step;
    for (double x : f) os << "," << float_json(x).dump();
    os << "\n";
  };
  for (std::size_t k = 0; k < window_steps.size(); ++k) row(window_steps[k], window_frequencies[k]);
  if (window_steps.empty() || window_steps.back() != steps) {
    std::vector<double> f;
    for (const auto& x : frequencies) f.push_back(to_double(x));
    row(steps, f);
  }
  return os.str();
}

OrderDiagnostics order_diagnostics(const BratteliDiagram& d, const EdgeOrder& o, Level depth) {
  if (depth == 0) throw ArgumentError("depth must be positive");
  OrderDiagnostics r;
  r.depth = depth;
  bool proper = true;
  for (Level n = 1; n <= depth; ++n) {
    Level horizon = std::min<Level>(n + depth, d.max_level());
    ExtremalPaths e = extremal_paths(d, o, n, std::max(horizon, n));
    r.max_counts.push_back(e.maximal.size());
    r.min_counts.push_back(e.minimal.size());
    if (e.maximal.size() != e.minimal.size()) r.perfectness_violated = true;
    proper = proper && e.maximal.size() == 1 && e.minimal.size() == 1;
  }
  r.proper_evidence = proper;
  return r;
}

nlohmann::json OrderDiagnostics::to_json() const {
  return {{"depth", depth},
          {"max_counts", max_counts},
          {"min_counts", min_counts},
          {"perfectness_violated", perfectness_violated},
          {"proper_evidence", proper_evidence}};
}

nlohmann::json path_json(const FinitePath& p) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : p) j.push_back({e.source, e.target, e.slot});
  return j;
}

FinitePath path_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("path must be an array of [source, target, slot] triples");
  FinitePath p;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) throw SchemaError("path edge must be [source, target, slot]");
    p.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<std::size_t>()});
  }
  return p;
}

}  // namespace bratteli
