#include "bratteli/measure.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bratteli/report.hpp"

namespace bratteli {

// ---------------------------------------------------------------------------
// TowerMeasure

TowerMeasure TowerMeasure::from_levels(std::shared_ptr<const BratteliDiagram> d, std::vector<RatVector> q,
                                       std::string label) {
  if (q.empty()) throw ArgumentError("tower measure needs at least the level-1 vector");
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i].size() != d->level_size(i + 1))
      throw ArgumentError("tower vector for level " + std::to_string(i + 1) + " has the wrong length");
  Level top = q.size();
  auto data = std::make_shared<std::vector<RatVector>>(std::move(q));
  Evaluator f = [data](Level n) { return (*data)[n - 1]; };
  return closed_form(std::move(d), std::move(f), std::move(label), top);
}

TowerMeasure TowerMeasure::closed_form(std::shared_ptr<const BratteliDiagram> d, Evaluator f, std::string label,
                                       std::optional<Level> max_level) {
  TowerMeasure t;
  t.diagram_ = std::move(d);
  t.eval_ = std::move(f);
  t.label_ = std::move(label);
  t.max_level_ = max_level;
  return t;
}

TowerMeasure TowerMeasure::pascal(std::shared_ptr<const BratteliDiagram> d, const Rational& p) {
  if (p <= 0 || p >= 1) throw ArgumentError("pascal measure parameter must lie in (0, 1)");
  Rational one_minus = 1 - p;
  Evaluator f = [p, one_minus](Level n) {
    RatVector q(n + 1);
    Integer binom = 1;
    for (std::size_t i = 0; i <= n; ++i) {
      Rational term(binom);
      Rational pi, qi;
      mpz_pow_ui(pi.get_num_mpz_t(), p.get_num_mpz_t(), i);
      mpz_pow_ui(pi.get_den_mpz_t(), p.get_den_mpz_t(), i);
      mpz_pow_ui(qi.get_num_mpz_t(), one_minus.get_num_mpz_t(), n - i);
      mpz_pow_ui(qi.get_den_mpz_t(), one_minus.get_den_mpz_t(), n - i);
      q[i] = term * pi * qi;
      q[i].canonicalize();
      binom = binom * Integer(static_cast<unsigned long>(n - i)) / Integer(static_cast<unsigned long>(i + 1));
    }
    return q;
  };
  return closed_form(std::move(d), std::move(f), "pascal p=" + to_string(p));
}

TowerMeasure TowerMeasure::from_json(std::shared_ptr<const BratteliDiagram> d, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("q") || !j["q"].is_array()) throw SchemaError("measure document needs a 'q' array");
  std::vector<RatVector> q;
  for (const auto& level : j["q"]) {
    if (!level.is_array()) throw SchemaError("each entry of 'q' must be an array of rationals");
    RatVector v;
    for (const auto& x : level) {
      if (x.is_string())
        v.push_back(parse_rational(x.get<std::string>()));
      else if (x.is_number_integer())
        v.emplace_back(std::to_string(x.get<long long>()));
      else
        throw SchemaError("measure values must be \"p/q\" strings");
    }
    q.push_back(std::move(v));
  }
  return from_levels(std::move(d), std::move(q), j.value("label", std::string("explicit")));
}

RatVector TowerMeasure::at(Level n) const {
  if (n == 0) return RatVector{Rational(1)};
  if (max_level_ && n > *max_level_)
    throw DepthError("tower measure '" + label_ + "' has no values at level " + std::to_string(n), n);
  return eval_(n);
}

RatVector TowerMeasure::cylinder_values(Level n) const {
  RatVector q = at(n);
  IntVector h = diagram_->heights(n);
  for (std::size_t w = 0; w < q.size(); ++w) {
    q[w] /= Rational(h[w]);
  }
  return q;
}

nlohmann::json TowerMeasure::to_json(Level depth) const {
  nlohmann::json levels = nlohmann::json::array();
  if (max_level_) depth = std::min(depth, *max_level_);
  for (Level n = 1; n <= depth; ++n) levels.push_back(rational_array(at(n)));
  return {{"label", label_}, {"q", levels}};
}

// ---------------------------------------------------------------------------

InvarianceResult check_invariance(const TowerMeasure& q, Level depth) {
  const BratteliDiagram& d = q.diagram();
  auto fail = [](Level n, std::string why) { return InvarianceResult{false, n, std::move(why)}; };
  auto probability = [](const RatVector& v) {
    return std::all_of(v.begin(), v.end(), [](const Rational& x) { return x >= 0; }) && sum(v) == 1;
  };
  if (depth == 0) return {};
  RatVector current = q.at(1);
  for (Level n = 1; n <= depth; ++n) {
    if (current.size() != d.level_size(n)) return fail(n, "vector length does not match |V_n|");
    if (!probability(current)) return fail(n, "not a probability vector");
    if (n == depth) break;
    RatVector next = q.at(n + 1);
    if (next.size() != d.level_size(n + 1)) return fail(n + 1, "vector length does not match |V_n|");
    if (transpose_times(d.stochastic_matrix(n), next) != current) return fail(n, "F^T q(n+1) differs from q(n)");
    current = std::move(next);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Slices

std::vector<RatVector> PolytopeSlice::vertex_vectors() const {
  std::vector<RatVector> out;
  out.reserve(product.rows());
  for (std::size_t v = 0; v < product.rows(); ++v) out.push_back(product.row(v));
  return out;
}

namespace {

// G = F_{n+m}⋯F_n accumulated left to right while the cursor advances.
ScaledMatrix slice_product(const BratteliDiagram& d, Level n, Level m) {
  if (n == 0) throw ArgumentError("slice base level must be at least 1");
  if (n + m > d.max_incidence_level())
    throw DepthError("slice needs F up to level " + std::to_string(n + m), n + m);
  LevelCursor cur(d, n);
  ScaledMatrix g = cur.stochastic();
  for (Level k = 1; k <= m; ++k) {
    cur.advance();
    g = cur.stochastic() * g;
  }
  return g;
}

}  // namespace

PolytopeSlice polytope_slice(const BratteliDiagram& d, Level n, Level m) {
  return {n, m, slice_product(d, n, m).to_rational()};
}

Rational slice_diameter(const PolytopeSlice& s) {
  Rational best = 0;
  auto rows = s.vertex_vectors();
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) best = std::max(best, l1_distance(rows[a], rows[b]));
  return best;
}

std::vector<Rational> diameter_series(const BratteliDiagram& d, Level n, Level max_depth) {
  if (n + max_depth > d.max_incidence_level())
    throw DepthError("diameter series needs F up to level " + std::to_string(n + max_depth), n + max_depth);
  std::vector<Rational> out;
  LevelCursor cur(d, n);
  ScaledMatrix g = cur.stochastic();
  out.push_back(g.max_row_distance());
  for (Level k = 1; k <= max_depth; ++k) {
    cur.advance();
    g = cur.stochastic() * g;
    out.push_back(g.max_row_distance());
  }
  return out;
}

Level default_base_level(const BratteliDiagram& d, Level m) {
  constexpr Level kSearch = 64;
  for (Level n = 1; n <= kSearch && n + m <= d.max_incidence_level(); ++n) {
    bool ok = true;
    for (Level k = n; ok && k <= n + m; ++k) {
      IntMatrix f = d.incidence(k);
      ok = f.square() && determinant(f) != 0;
    }
    if (ok) return n;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Measure counting

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

// Euclidean distance from x to the convex hull of `others` (Frank–Wolfe).
double hull_distance(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& others) {
  if (others.empty()) return std::numeric_limits<double>::infinity();
  Eigen::VectorXd y = others.front();
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd grad = y - x;
    std::size_t best = 0;
    double best_val = grad.dot(others[0]);
    for (std::size_t i = 1; i < others.size(); ++i) {
      double v = grad.dot(others[i]);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    Eigen::VectorXd dir = others[best] - y;
    double denom = dir.squaredNorm();
    if (denom == 0) break;
    double step = std::clamp(-grad.dot(dir) / denom, 0.0, 1.0);
    if (step == 0) break;
    y += step * dir;
  }
  return (y - x).norm();
}

RatVector scaled_row(const ScaledMatrix& g, std::size_t r) {
  RatVector v(g.cols());
  for (std::size_t c = 0; c < g.cols(); ++c) v[c] = g.at(r, c);
  return v;
}

}  // namespace

std::size_t MeasureReport::extreme_count() const {
  return static_cast<std::size_t>(
      std::count_if(clusters.begin(), clusters.end(), [](const MeasureCluster& c) { return c.extreme_candidate; }));
}

nlohmann::json MeasureReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : clusters) {
    nlohmann::json supports = nlohmann::json::array();
    for (const auto& s : c.level_support) supports.push_back(s);
    cs.push_back({{"members", c.members},
                  {"representative_vertex", c.representative_vertex},
                  {"representative", rational_array(c.representative)},
                  {"extreme_candidate", c.extreme_candidate},
                  {"support", c.support},
                  {"level_support", supports},
                  {"min_mass", float_array(c.min_mass)}});
  }
  nlohmann::json j{{"base", base},
                   {"depth", depth},
                   {"radius", float_json(radius)},
                   {"cluster_count", clusters.size()},
                   {"extreme_count", extreme_count()},
                   {"clusters", cs},
                   {"dimension_upper_bound", dimension_upper_bound},
                   {"cluster_dimension", cluster_dimension},
                   {"singular_values", float_array(singular_values)},
                   {"diameter", rational_json(diameter)},
                   {"exact_finite_rank", exact_finite_rank.to_json()}};
  j["min_separation"] = min_separation ? rational_json(*min_separation) : nlohmann::json(nullptr);
  return j;
}

MeasureReport count_measures(const BratteliDiagram& d, Level m, double eps, std::optional<Level> base) {
  if (!(eps > 0)) throw ArgumentError("clustering radius must be positive");
  MeasureReport rep;
  rep.base = base ? *base : default_base_level(d, m);
  rep.depth = m;
  rep.radius = eps;
  const Level top = rep.base + m + 1;
  if (!d.bounded_rank(top))
    throw RankError("level sizes grow without bound; telescope to a finite-rank diagram first");

  // Keep every partial product so candidate measures can be pushed back down.
  std::vector<ScaledMatrix> factors;
  LevelCursor cur(d, rep.base);
  factors.push_back(cur.stochastic());
  ScaledMatrix g = factors.back();
  for (Level k = 1; k <= m; ++k) {
    cur.advance();
    factors.push_back(cur.stochastic());
    g = factors.back() * g;
  }
  const std::size_t size = g.rows();
  std::vector<RatVector> rows;
  rows.reserve(size);
  for (std::size_t v = 0; v < size; ++v) rows.push_back(scaled_row(g, v));
  rep.diameter = g.max_row_distance();

  const Rational radius = rational_from_double(eps);
  UnionFind uf(size);
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t b = a + 1; b < size; ++b)
      if (l1_distance(rows[a], rows[b]) <= radius) uf.join(a, b);

  std::vector<std::size_t> roots;
  for (std::size_t v = 0; v < size; ++v)
    if (uf.find(v) == v) roots.push_back(v);
  for (std::size_t r : roots) {
    MeasureCluster c;
    for (std::size_t v = 0; v < size; ++v)
      if (uf.find(v) == r) c.members.push_back(v);
    c.representative_vertex = c.members.front();
    c.representative = rows[c.representative_vertex];
    rep.clusters.push_back(std::move(c));
  }

  for (std::size_t i = 0; i < rep.clusters.size(); ++i)
    for (std::size_t j = i + 1; j < rep.clusters.size(); ++j) {
      Rational s = l1_distance(rep.clusters[i].representative, rep.clusters[j].representative);
      if (!rep.min_separation || s < *rep.min_separation) rep.min_separation = s;
    }

  // Affine dimension of the slice: exact rank of differences plus a float profile.
  const std::size_t dim = g.cols();
  if (size > 1) {
    RatMatrix diff(size - 1, dim);
    Eigen::MatrixXd fd(size - 1, dim);
    for (std::size_t v = 1; v < size; ++v)
      for (std::size_t c = 0; c < dim; ++c) {
        diff(v - 1, c) = rows[v][c] - rows[0][c];
        fd(static_cast<Eigen::Index>(v - 1), static_cast<Eigen::Index>(c)) = to_double(diff(v - 1, c));
      }
    rep.dimension_upper_bound = rank(diff);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(fd);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rep.singular_values.push_back(svd.singularValues()(i));
  }
  if (rep.clusters.size() > 1) {
    RatMatrix diff(rep.clusters.size() - 1, dim);
    for (std::size_t i = 1; i < rep.clusters.size(); ++i)
      for (std::size_t c = 0; c < dim; ++c)
        diff(i - 1, c) = rep.clusters[i].representative[c] - rep.clusters[0].representative[c];
    rep.cluster_dimension = rank(diff);
  }

  std::vector<Eigen::VectorXd> reps;
  for (const auto& c : rep.clusters) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) x(static_cast<Eigen::Index>(k)) = to_double(c.representative[k]);
    reps.push_back(std::move(x));
  }
  for (std::size_t i = 0; i < rep.clusters.size(); ++i) {
    std::vector<Eigen::VectorXd> others;
    for (std::size_t j = 0; j < reps.size(); ++j)
      if (j != i) others.push_back(reps[j]);
    rep.clusters[i].extreme_candidate = hull_distance(reps[i], others) > eps;
  }

  // Candidate measure of a cluster: uniform on its members at the top level, pushed down.
  double floor_mass = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  for (auto& c : rep.clusters) {
    RatVector q(size, Rational(0));
    Rational share(1, static_cast<unsigned long>(c.members.size()));
    for (auto v : c.members) q[v] = share;
    std::vector<RatVector> per_level{q};
    for (std::size_t k = factors.size(); k-- > 0;) {
      RatVector next(factors[k].cols(), Rational(0));
      for (std::size_t r = 0; r < factors[k].rows(); ++r) {
        if (q[r] == 0) continue;
        for (std::size_t col = 0; col < factors[k].cols(); ++col) next[col] += q[r] * factors[k].at(r, col);
      }
      q = std::move(next);
      per_level.push_back(q);
    }
    std::reverse(per_level.begin(), per_level.end());
    double running = std::numeric_limits<double>::infinity();
    for (const auto& v : per_level) {
      std::vector<std::size_t> support;
      double least = std::numeric_limits<double>::infinity();
      for (std::size_t w = 0; w < v.size(); ++w) {
        double x = to_double(v[w]);
        if (x >= eps) {
          support.push_back(w);
          least = std::min(least, x);
        }
      }
      c.level_support.push_back(support);
      c.min_mass.push_back(least);
      running = std::min(running, least);
    }
    c.support = c.level_support.front();
    if (trace.empty()) trace.assign(c.min_mass.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < c.min_mass.size(); ++i) trace[i] = std::min(trace[i], c.min_mass[i]);
    floor_mass = std::min(floor_mass, running);
  }
  for (std::size_t i = 1; i < trace.size(); ++i) trace[i] = std::min(trace[i], trace[i - 1]);

  Verdict& v = rep.exact_finite_rank;
  v.criterion = "exact_finite_rank";
  v.depth = m;
  v.trace = trace;
  v.witness = {{"delta", float_json(floor_mass)}, {"radius", float_json(eps)}, {"base", rep.base}};
  if (floor_mass >= eps) {
    v.status = Status::Evidence;
    v.direction = "exact finite rank";
    v.note = "tower masses on each support stay above delta through depth " + std::to_string(m);
  } else {
    v.status = Status::Inconclusive;
    v.direction = "exact finite rank";
    v.note = "no support mass bound above the clustering radius";
  }
  return rep;
}

// ---------------------------------------------------------------------------

Rational cylinder_measure(const TowerMeasure& q, const FinitePath& path) {
  const BratteliDiagram& d = q.diagram();
  validate_path(d, path);
  if (path.empty()) return 1;
  Level n = path.size();
  std::size_t w = path.back().target;
  return q.at(n)[w] / Rational(d.heights(n)[w]);
}

RatVector decompose(const TowerMeasure& q, Level n, Level m) {
  PolytopeSlice s = polytope_slice(q.diagram(), n, m);
  RatVector coeffs = q.at(n + m + 1);
  if (coeffs.size() != s.size()) throw InvarianceError("coefficient vector does not match the slice");
  RatVector combo = transpose_times(s.product, coeffs);
  if (combo != q.at(n))
    throw InvarianceError("q(" + std::to_string(n) + ") is not the combination of slice vectors with weights q(" +
                          std::to_string(n + m + 1) + ")");
  return coeffs;
}

}  // namespace bratteli
