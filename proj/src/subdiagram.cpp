#include "bratteli/subdiagram.hpp"

#include <algorithm>
#include <cmath>

#include "bratteli/report.hpp"

namespace bratteli {

namespace {

std::vector<std::size_t> checked_set(std::vector<std::size_t> w, std::size_t size, Level n) {
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());
  if (w.empty()) throw StructureError("W_" + std::to_string(n) + " is empty");
  if (w.back() >= size)
    throw ArgumentError("vertex " + std::to_string(w.back()) + " does not exist at level " + std::to_string(n));
  return w;
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& w, std::size_t size) {
  std::vector<bool> in(size, false);
  for (auto v : w) in[v] = true;
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < size; ++v)
    if (!in[v]) out.push_back(v);
  return out;
}

IntMatrix submatrix(const IntMatrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  IntMatrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  return out;
}

// Edge subdiagram vertex sets W_1..W_{k+1}.
std::vector<std::vector<std::size_t>> edge_vertex_sets(const BratteliDiagram& d, const SubdiagramSpec& s) {
  const IntVector& root = s.root ? *s.root : d.root_edges();
  if (root.size() != d.level_size(1)) throw ArgumentError("retained root edges do not match |V_1|");
  std::vector<std::vector<std::size_t>> sets;
  std::vector<std::size_t> w;
  for (std::size_t v = 0; v < root.size(); ++v) {
    if (root[v] < 0 || root[v] > d.root_edges()[v]) throw ArgumentError("retained root edges exceed the diagram's");
    if (root[v] > 0) w.push_back(v);
  }
  sets.push_back(checked_set(w, root.size(), 1));
  for (std::size_t k = 0; k < s.G.size(); ++k) {
    const Level n = k + 1;
    IntMatrix f = d.incidence(n);
    const IntMatrix& g = s.G[k];
    if (g.rows() != f.rows() || g.cols() != f.cols())
      throw ArgumentError("retained matrix at level " + std::to_string(n) + " has the wrong shape");
    for (std::size_t i = 0; i < f.data().size(); ++i)
      if (g.data()[i] < 0 || g.data()[i] > f.data()[i])
        throw ArgumentError("retained multiplicities at level " + std::to_string(n) + " exceed the incidence matrix");
    std::vector<std::size_t> next;
    for (std::size_t v = 0; v < g.rows(); ++v) {
      bool any = false;
      for (auto u : sets.back()) any = any || g(v, u) > 0;
      if (any) next.push_back(v);
    }
    sets.push_back(checked_set(next, g.rows(), n + 1));
  }
  return sets;
}

// Recursion data valid from `from` on: f̃ sums within the tail over the row sum r.
struct TailView {
  Polynomial r;
  std::vector<Polynomial> inner;  // Σ_{w∈W} f̃_vw for each retained v
  Level from = 1;
};

std::optional<TailView> tail_view(const BratteliDiagram& d, const SubdiagramSpec& s) {
  if (s.kind != SubdiagramSpec::Kind::Vertex || !d.rule()) return std::nullopt;
  auto sel = s.tail_selector();
  if (!sel) return std::nullopt;
  auto r = d.rule()->uniform_row_sum();
  if (!r) return std::nullopt;
  const Level from = std::max<Level>(s.W.size() + 1, d.tail_start());
  IntVector h = d.relative_heights(from);
  if (!std::all_of(h.begin(), h.end(), [&](const Integer& x) { return x == h.front(); })) return std::nullopt;
  auto sums = d.rule()->row_sums(*sel, *sel);
  if (!sums || sums->empty()) return std::nullopt;
  return TailView{*r, *sums, from};
}

nlohmann::json degree_json(const DegreeTest& t) {
  return {{"summand", t.summand}, {"exponent", float_json(t.exponent)}, {"reason", t.reason}};
}

std::vector<double> partial_of(const std::vector<Rational>& xs) {
  std::vector<double> out;
  for (const auto& x : xs) out.push_back(to_double(x));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

SubdiagramSpec SubdiagramSpec::vertex(std::vector<std::vector<std::size_t>> w, std::optional<VertexSelector> tail) {
  SubdiagramSpec s;
  s.kind = Kind::Vertex;
  s.W = std::move(w);
  s.tail = std::move(tail);
  return s;
}

SubdiagramSpec SubdiagramSpec::full() { return vertex({}, VertexSelector::all()); }

SubdiagramSpec SubdiagramSpec::edges(std::vector<IntMatrix> g, std::optional<IntVector> root) {
  SubdiagramSpec s;
  s.kind = Kind::Edge;
  s.G = std::move(g);
  s.root = std::move(root);
  return s;
}

SubdiagramSpec SubdiagramSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("subdiagram spec must be a JSON object");
  const std::string kind = j.value("kind", std::string("vertex"));
  try {
    if (kind == "vertex") {
      std::vector<std::vector<std::size_t>> w;
      if (j.contains("W")) w = j["W"].get<std::vector<std::vector<std::size_t>>>();
      std::optional<VertexSelector> tail;
      if (j.contains("tail")) tail = VertexSelector::from_json(j["tail"]);
      if (w.empty() && !tail) throw SchemaError("vertex subdiagram needs 'W' or 'tail'");
      return vertex(std::move(w), std::move(tail));
    }
    if (kind == "edge") {
      if (!j.contains("G") || !j["G"].is_array() || j["G"].empty()) throw SchemaError("edge subdiagram needs 'G' matrices");
      std::vector<IntMatrix> g;
      for (const auto& m : j["G"]) {
        auto rows = m.get<std::vector<std::vector<long long>>>();
        IntMatrix x(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != x.cols()) throw SchemaError("ragged matrix in 'G'");
          for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = std::to_string(rows[r][c]);
        }
        g.push_back(std::move(x));
      }
      std::optional<IntVector> root;
      if (j.contains("root")) {
        IntVector rv;
        for (auto x : j["root"].get<std::vector<long long>>()) rv.emplace_back(std::to_string(x));
        root = std::move(rv);
      }
      return edges(std::move(g), std::move(root));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed subdiagram spec: ") + e.what());
  }
  throw SchemaError("subdiagram kind must be \"vertex\" or \"edge\"");
}

nlohmann::json SubdiagramSpec::to_json() const {
  if (kind == Kind::Edge) {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& m : G) g.push_back(matrix_json(m));
    nlohmann::json j{{"kind", "edge"}, {"G", g}};
    if (root) j["root"] = integer_array(*root);
    return j;
  }
  nlohmann::json j{{"kind", "vertex"}, {"W", W}};
  if (tail) j["tail"] = tail->to_json();
  return j;
}

std::optional<VertexSelector> SubdiagramSpec::tail_selector() const {
  if (kind != Kind::Vertex) return std::nullopt;
  if (tail) return tail;
  if (W.empty()) return VertexSelector::all();
  return VertexSelector::of(W.back());
}

std::vector<std::size_t> SubdiagramSpec::W_at(const BratteliDiagram& d, Level n) const {
  if (n == 0) throw ArgumentError("subdiagram levels start at 1");
  const std::size_t size = d.level_size(n);
  if (kind == Kind::Edge) {
    if (n > G.size() + 1) throw DepthError("edge subdiagram is specified through level " + std::to_string(G.size() + 1), n);
    return edge_vertex_sets(d, *this)[n - 1];
  }
  if (n <= W.size()) return checked_set(W[n - 1], size, n);
  return checked_set(tail_selector()->resolve(size), size, n);
}

BratteliDiagram restrict(const BratteliDiagram& d, const SubdiagramSpec& s) {
  const std::string name = d.name() + " restricted";
  if (s.kind == SubdiagramSpec::Kind::Edge) {
    auto sets = edge_vertex_sets(d, s);
    const IntVector& root = s.root ? *s.root : d.root_edges();
    IntVector r;
    for (auto v : sets[0]) r.push_back(root[v]);
    std::vector<IntMatrix> prefix;
    for (std::size_t k = 0; k < s.G.size(); ++k) prefix.push_back(submatrix(s.G[k], sets[k + 1], sets[k]));
    return BratteliDiagram(name, std::move(r), std::move(prefix));
  }
  Level explicit_depth = d.max_incidence_level();
  if (d.rule()) explicit_depth = std::max<Level>({s.W.size(), d.prefix_depth(), d.rule()->from_level() - 1});
  IntVector r;
  for (auto v : s.W_at(d, 1)) r.push_back(d.root_edges()[v]);
  std::vector<IntMatrix> prefix;
  for (Level n = 1; n <= explicit_depth; ++n) prefix.push_back(submatrix(d.incidence(n), s.W_at(d, n + 1), s.W_at(d, n)));
  std::optional<DiagramRule> rule;
  if (d.rule()) rule = DiagramRule::restricted(*d.rule(), *s.tail_selector());
  return BratteliDiagram(name, std::move(r), std::move(prefix), std::move(rule));
}

std::vector<Rational> thinness_ratios(const BratteliDiagram& d, const SubdiagramSpec& s, Level depth) {
  BratteliDiagram sub = restrict(d, s);
  std::vector<Rational> out;
  for (Level n = 1; n <= depth; ++n) {
    auto w = s.W_at(d, n);
    IntVector h = d.heights(n);
    IntVector hb = sub.heights(n);
    Rational worst = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      Rational r(hb[i], h[w[i]]);
      r.canonicalize();
      worst = std::max(worst, r);
    }
    out.push_back(worst);
  }
  return out;
}

Verdict thinness_test(const BratteliDiagram& d, const SubdiagramSpec& s, Level depth) {
  if (depth == 0) throw ArgumentError("depth must be positive");
  if (depth > d.max_level()) throw DepthError("diagram ends before level " + std::to_string(depth), depth);
  Verdict v;
  v.criterion = "thin";
  v.depth = depth;
  v.direction = "thin";
  v.trace = partial_of(thinness_ratios(d, s, depth));
  SimplicityReport simple = d.simplicity(depth);
  if (!simple.proved && !simple.simple_through_depth) {
    v.status = Status::Inconclusive;
    v.note = "height-ratio criterion assumes a simple ambient diagram; not simple through depth " + std::to_string(depth);
    return v;
  }
  if (auto tv = tail_view(d, s)) {
    std::vector<RationalFunction> gs;
    for (const auto& p : tv->inner) gs.emplace_back(p, tv->r);
    const RationalFunction& gmax = eventual_max(gs);
    const RationalFunction& gmin = eventual_min(gs);
    RationalFunction one(Polynomial(1));
    auto lim = gmax.limit();
    DegreeTest up = series_test(one - gmax);
    if ((lim && *lim < 1) || (!up.converges && (one - gmax).eventual_sign() >= 0)) {
      v.status = Status::Proved;
      v.witness = {{"ratio_step", gmax.to_string()}, {"test", degree_json(up)}};
      v.note = "product of height-ratio steps tends to 0";
      return v;
    }
    DegreeTest down = series_test(one - gmin);
    if (gmin.eventual_sign() > 0 && (one - gmin).eventual_sign() >= 0 && down.converges) {
      v.status = Status::Refuted;
      v.direction = "not thin";
      v.witness = {{"ratio_step", gmin.to_string()}, {"test", degree_json(down)}};
      v.note = "height ratios stay above a positive limit";
      return v;
    }
  }
  const double first = v.trace.front(), last = v.trace.back();
  const std::size_t half = v.trace.size() / 2;
  if (last < 1e-3 || last < 0.05 * first) {
    v.status = Status::Evidence;
    v.note = "height ratios fall to " + std::to_string(last) + "; depth-limited";
  } else if (half > 0 && last > 0.99 * v.trace[half]) {
    v.status = Status::Evidence;
    v.direction = "not thin";
    v.note = "height ratios level off; depth-limited";
  } else {
    v.status = Status::Inconclusive;
    v.note = "height ratios still moving at depth " + std::to_string(depth);
  }
  return v;
}

// ---------------------------------------------------------------------------

nlohmann::json ExtensionReport::to_json() const {
  nlohmann::json cls = finite() ? "finite" : infinite() ? "infinite" : "undetermined";
  return {{"depth", depth},
          {"series_towers", rational_array(series_towers)},
          {"series_masses", rational_array(series_masses)},
          {"series_growth", rational_array(series_growth)},
          {"consistent", consistent},
          {"sufficient_trace", float_array(sufficient_trace)},
          {"thinness_trace", float_array(thinness_trace)},
          {"thin", thin.to_json()},
          {"sufficient", sufficient.to_json()},
          {"extension", extension.to_json()},
          {"classification", cls}};
}

ExtensionReport extension_test(const BratteliDiagram& d, const SubdiagramSpec& s, const TowerMeasure& qbar, Level depth) {
  if (depth == 0) throw ArgumentError("depth must be positive");
  const BratteliDiagram& sub = qbar.diagram();
  InvarianceResult inv = check_invariance(qbar, depth + 1);
  if (!inv.holds) throw InvarianceError("subdiagram measure is not invariant: " + inv.reason);

  ExtensionReport rep;
  rep.depth = depth;
  Rational t1 = 0, t2 = 0, t3 = 0;
  std::vector<double> suff_terms, tower_terms;
  auto mass = [&](Level n) {
    auto w = s.W_at(d, n);
    IntVector h = d.heights(n);
    IntVector hb = sub.heights(n);
    RatVector q = qbar.at(n);
    Rational m = 0;
    for (std::size_t i = 0; i < w.size(); ++i) m += Rational(h[w[i]]) * q[i] / hb[i];
    return m;
  };
  Rational prev_mass = mass(1);
  for (Level n = 1; n <= depth; ++n) {
    auto wn = s.W_at(d, n), wn1 = s.W_at(d, n + 1);
    auto out = complement(wn, d.level_size(n));
    IntMatrix f = d.incidence(n);
    RatMatrix F = d.stochastic_matrix(n);
    IntVector h = d.heights(n), h1 = d.heights(n + 1);
    IntVector hb1 = sub.heights(n + 1);
    RatVector q1 = qbar.at(n + 1);
    Rational a = 0, b = 0, worst = 0;
    for (std::size_t i = 0; i < wn1.size(); ++i) {
      const std::size_t v = wn1[i];
      Rational p = q1[i] / hb1[i];
      Integer edges = 0;
      Rational leave = 0;
      for (auto w : out) {
        edges += f(v, w) * h[w];
        leave += F(v, w);
      }
      a += p * edges;
      b += p * h1[v] * leave;
      worst = std::max(worst, leave);
    }
    Rational next_mass = mass(n + 1);
    t1 += a;
    t2 += b;
    t3 += next_mass - prev_mass;
    prev_mass = next_mass;
    rep.series_towers.push_back(t1);
    rep.series_masses.push_back(t2);
    rep.series_growth.push_back(t3);
    rep.consistent = rep.consistent && t1 == t2 && t2 == t3;
    suff_terms.push_back(to_double(worst));
    tower_terms.push_back(to_double(a));
  }
  rep.sufficient_trace = partial_sums(suff_terms);

  rep.thin = thinness_test(d, s, depth);
  rep.thinness_trace = rep.thin.trace;

  // Sufficient condition: Σ max_v Σ_{w∉W} f_vw < ∞.
  rep.sufficient.criterion = "sufficient";
  rep.sufficient.depth = depth;
  rep.sufficient.direction = "sum converges";
  rep.sufficient.trace = rep.sufficient_trace;
  if (auto tv = tail_view(d, s)) {
    std::vector<RationalFunction> leave;
    for (const auto& p : tv->inner) leave.emplace_back(tv->r - p, tv->r);
    const RationalFunction& worst = eventual_max(leave);
    DegreeTest t = series_test(worst);
    rep.sufficient.status = t.converges ? Status::Proved : Status::Refuted;
    rep.sufficient.witness = degree_json(t);
    rep.sufficient.note = t.converges ? "series converges" : "series diverges; the sufficient condition fails";
  } else {
    double slope = 0;
    int cls = classify_summands(suff_terms, &slope);
    bool zero = std::all_of(suff_terms.begin(), suff_terms.end(), [](double x) { return x == 0; });
    rep.sufficient.witness = {{"slope", float_json(slope)}};
    rep.sufficient.status = (zero || cls < 0) ? Status::Evidence : Status::Inconclusive;
    rep.sufficient.note = "depth-limited estimate";
  }

  Verdict& e = rep.extension;
  e.criterion = "extension";
  e.depth = depth;
  e.trace = partial_of(rep.series_towers);
  if (rep.thin.proved()) {
    e.status = Status::Proved;
    e.direction = "infinite";
    e.note = "thin subdiagram: every extension is infinite";
  } else if (rep.sufficient.proved()) {
    e.status = Status::Proved;
    e.direction = "finite";
    e.note = "sufficient series converges";
  } else {
    double slope = 0;
    int cls = classify_summands(tower_terms, &slope);
    bool zero = std::all_of(tower_terms.begin(), tower_terms.end(), [](double x) { return x == 0; });
    e.witness = {{"slope", float_json(slope)}};
    if (zero || cls < 0 || rep.sufficient.status == Status::Evidence) {
      e.status = Status::Evidence;
      e.direction = "finite";
      e.note = "extension mass levels off; depth-limited";
    } else if (cls > 0) {
      e.status = Status::Evidence;
      e.direction = "infinite";
      e.note = "extension mass keeps growing; depth-limited";
    } else {
      e.status = Status::Inconclusive;
      e.note = "extension series undecided at depth " + std::to_string(depth);
    }
  }
  return rep;
}

TowerMeasure odometer_measure(std::shared_ptr<const BratteliDiagram> sub) {
  if (sub->level_size(1) != 1 || !sub->bounded_rank(std::min<Level>(sub->max_level(), 64)) ||
      *sub->bounded_rank(std::min<Level>(sub->max_level(), 64)) != 1)
    throw ArgumentError("subdiagram has several vertices per level; supply its invariant measure");
  return TowerMeasure::closed_form(std::move(sub), [](Level) { return RatVector{Rational(1)}; }, "odometer");
}

ExtensionReport extension_test(const BratteliDiagram& d, const SubdiagramSpec& s, Level depth) {
  auto sub = std::make_shared<const BratteliDiagram>(restrict(d, s));
  return extension_test(d, s, odometer_measure(sub), depth);
}

TowerMeasure extend_measure(std::shared_ptr<const BratteliDiagram> d, const SubdiagramSpec& s, const TowerMeasure& qbar,
                            Level depth) {
  ExtensionReport rep = extension_test(*d, s, qbar, depth);
  if (rep.infinite()) throw InfiniteExtensionError("the extension of this subdiagram measure is infinite");
  const BratteliDiagram& sub = qbar.diagram();
  const Level top = depth + 1;
  auto w = s.W_at(*d, top);
  IntVector h = d->heights(top);
  IntVector hb = sub.heights(top);
  RatVector qb = qbar.at(top);
  RatVector q(d->level_size(top), Rational(0));
  for (std::size_t i = 0; i < w.size(); ++i) q[w[i]] = Rational(h[w[i]]) * qb[i] / hb[i];
  Rational total = sum(q);
  for (auto& x : q) x /= total;
  std::vector<RatVector> levels(top);
  levels[top - 1] = q;
  for (Level n = top - 1; n >= 1; --n) levels[n - 1] = transpose_times(d->stochastic_matrix(n), levels[n]);
  return TowerMeasure::from_levels(std::move(d), std::move(levels), "extension");
}

}  // namespace bratteli
