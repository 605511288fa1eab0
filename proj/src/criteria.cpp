#include "bratteli/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "bratteli/report.hpp"

namespace bratteli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using RFRow = std::vector<RationalFunction>;
using RFMatrix = std::vector<RFRow>;

RationalFunction eventual_abs(const RationalFunction& f) {
  return f.eventual_sign() < 0 ? RationalFunction(Polynomial(0)) - f : f;
}

Polynomial poly_det(const std::vector<std::vector<Polynomial>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Polynomial acc;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    std::vector<std::vector<Polynomial>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Polynomial> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(std::move(row));
    }
    Polynomial term = m[0][c] * poly_det(minor);
    acc = (c % 2 == 0) ? acc + term : acc - term;
  }
  return acc;
}

bool uniform(const IntVector& v) {
  return std::all_of(v.begin(), v.end(), [&](const Integer& x) { return x == v.front(); });
}

// Closed-form view of Fₙ = F̃ₙ / r(n) for constant-shape equal-row-sum rules
// whose heights are level-constant from the tail on.
struct SymbolicView {
  const DiagramRule* rule = nullptr;
  Polynomial r;

  RationalFunction entry(std::size_t v, std::size_t w) const { return {rule->entries()(v, w), r}; }
  std::size_t size() const { return rule->entries().rows(); }
};

std::optional<SymbolicView> symbolic_view(const BratteliDiagram& d) {
  if (!d.rule() || d.rule()->shape() != DiagramRule::Shape::Constant) return std::nullopt;
  if (!d.rule()->entries().square()) return std::nullopt;
  auto r = d.rule()->uniform_row_sum();
  if (!r) return std::nullopt;
  if (!uniform(d.relative_heights(d.tail_start()))) return std::nullopt;
  return SymbolicView{&*d.rule(), *r};
}

// Stochastic rows are f̃/r with uniform heights (any rule shape with a uniform row sum).
std::optional<Polynomial> uniform_rows(const BratteliDiagram& d) {
  if (!d.rule()) return std::nullopt;
  auto r = d.rule()->uniform_row_sum();
  if (!r) return std::nullopt;
  if (!uniform(d.relative_heights(d.tail_start()))) return std::nullopt;
  return r;
}

nlohmann::json degree_witness(const DegreeTest& t) {
  return {{"summand", t.summand}, {"exponent", float_json(t.exponent)}, {"reason", t.reason}};
}

std::vector<double> suffix_max(std::vector<double> xs) {
  for (std::size_t i = xs.size(); i-- > 1;) xs[i - 1] = std::max(xs[i - 1], xs[i]);
  return xs;
}

bool primitive(const IntMatrix& m) {
  if (!m.square()) return false;
  const std::size_t n = m.rows();
  IntMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = m(i, j) > 0 ? 1 : 0;
  IntMatrix p = b;
  // Wielandt: a primitive matrix has a positive power of order at most (n−1)²+1.
  std::size_t bound = (n - 1) * (n - 1) + 1;
  for (std::size_t k = 1; k <= bound; ++k) {
    if (strictly_positive(p)) return true;
    IntMatrix q = b * p;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p(i, j) = q(i, j) > 0 ? 1 : 0;
  }
  return false;
}

void require_finite_rank(const BratteliDiagram& d, Level depth, const char* what) {
  if (!d.bounded_rank(depth)) throw RankError(std::string(what) + " needs a finite-rank diagram");
}

Verdict numeric_sum_verdict(std::string criterion, const std::vector<double>& terms, Level depth,
                            const std::string& direction, bool divergence_supports) {
  Verdict v;
  v.criterion = std::move(criterion);
  v.depth = depth;
  v.direction = direction;
  v.trace = partial_sums(terms);
  double slope = 0;
  int cls = classify_summands(terms, &slope);
  v.witness = {{"slope", float_json(slope)}, {"terms", float_array(terms)}};
  bool all_zero = std::all_of(terms.begin(), terms.end(), [](double t) { return t == 0; });
  if (all_zero || cls == 0) {
    v.status = Status::Inconclusive;
    v.note = "partial sums do not separate convergence from divergence at depth " + std::to_string(depth);
  } else if ((cls > 0) == divergence_supports) {
    v.status = Status::Evidence;
    v.note = "depth-limited: summand slope " + std::to_string(slope);
  } else {
    v.status = Status::Inconclusive;
    v.note = "sufficient condition appears to fail at depth " + std::to_string(depth);
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

double projective_metric(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw ArgumentError("projective metric needs vectors of equal length");
  double hi = -kInf, lo = kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ArgumentError("projective metric needs strictly positive vectors");
    double q = x[i] / y[i];
    hi = std::max(hi, q);
    lo = std::min(lo, q);
  }
  return std::log(hi / lo);
}

double projective_metric(const RatVector& x, const RatVector& y) {
  if (x.size() != y.size() || x.empty()) throw ArgumentError("projective metric needs vectors of equal length");
  Rational hi, lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw ArgumentError("projective metric needs strictly positive vectors");
    Rational q = x[i] / y[i];
    if (i == 0 || q > hi) hi = q;
    if (i == 0 || q < lo) lo = q;
  }
  return std::log(to_double(hi / lo));
}

ContractionStats contraction_stats(const RatMatrix& a) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    bool any = false;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (a(r, c) < 0) throw ArgumentError("contraction coefficient needs a non-negative matrix");
      any = any || a(r, c) > 0;
    }
    if (!any) throw ArgumentError("contraction coefficient needs a matrix without zero rows");
  }
  ContractionStats s;
  if (std::any_of(a.data().begin(), a.data().end(), [](const Rational& x) { return x == 0; })) {
    s.phi = 0;
    s.tau = 1;
    return s;
  }
  // For a row pair (i, r) the quadruple minimum is min_j t_j / max_s t_s with t = a_i· / a_r·.
  Rational best = 1;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t r = i + 1; r < a.rows(); ++r) {
      Rational lo, hi;
      for (std::size_t j = 0; j < a.cols(); ++j) {
        Rational t = a(i, j) / a(r, j);
        if (j == 0 || t < lo) lo = t;
        if (j == 0 || t > hi) hi = t;
      }
      best = std::min(best, Rational(lo / hi));
    }
  s.phi = best;
  double root = std::sqrt(to_double(best));
  s.tau = (1 - root) / (1 + root);
  return s;
}

ContractionStats contraction_stats(const IntMatrix& a) { return contraction_stats(to_rational(a)); }

UeCriterion parse_criterion(const std::string& name) {
  if (name == "row_diff") return UeCriterion::RowDiff;
  if (name == "min_sum") return UeCriterion::MinSum;
  if (name == "tau_product") return UeCriterion::TauProduct;
  if (name == "phi_sum") return UeCriterion::PhiSum;
  if (name == "ratio_sum") return UeCriterion::RatioSum;
  if (name == "norm_growth") return UeCriterion::NormGrowth;
  throw ArgumentError("unknown criterion '" + name + "'");
}

const char* to_string(UeCriterion c) {
  switch (c) {
    case UeCriterion::RowDiff: return "row_diff";
    case UeCriterion::MinSum: return "min_sum";
    case UeCriterion::TauProduct: return "tau_product";
    case UeCriterion::PhiSum: return "phi_sum";
    case UeCriterion::RatioSum: return "ratio_sum";
    case UeCriterion::NormGrowth: return "norm_growth";
  }
  return "row_diff";
}

// ---------------------------------------------------------------------------
// Greedy telescoping

TelescopingSchedule greedy_telescoping(const BratteliDiagram& d, std::size_t targets, Level base, Level budget) {
  if (base == 0) throw ArgumentError("telescoping base must be at least 1");
  TelescopingSchedule s;
  const Level last = d.max_incidence_level();
  if (base > last) throw DepthError("base level beyond the diagram", base);
  LevelCursor cur(d, base);
  ScaledMatrix f, next;
  s.levels_used = 1;
  for (std::size_t k = 1; k <= targets; ++k) {
    Rational target(1);
    mpz_mul_2exp(target.get_den_mpz_t(), target.get_den_mpz_t(), k);
    const Level start = cur.level();
    ScaledMatrix g;
    cur.stochastic_into(g);
    Level m = 0;
    double checkpoint = -1;
    while (!g.max_row_distance_below(target)) {
      // A block that barely contracts across a doubling of its length has stalled.
      if (m >= 128 && (m & (m - 1)) == 0) {
        double now = to_double(g.max_row_distance());
        if (checkpoint >= 0 && m >= 256 && m >= 4 * start && now > 0.99 * checkpoint) {
          s.stagnated = true;
          s.diameters.push_back(g.max_row_distance());
          return s;
        }
        checkpoint = now;
      }
      if (s.levels_used >= budget || cur.level() + 1 > last) {
        s.budget_exhausted = true;
        return s;
      }
      cur.advance();
      ++s.levels_used;
      cur.stochastic_into(f);
      next.assign_product(f, g);
      std::swap(g, next);
      ++m;
    }
    s.starts.push_back(start);
    s.lengths.push_back(m);
    s.diameters.push_back(g.max_row_distance());
    ++s.achieved;
    if (k == targets) break;
    if (cur.level() + 1 > last || s.levels_used >= budget) {
      s.budget_exhausted = true;
      return s;
    }
    cur.advance();
    ++s.levels_used;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Unique ergodicity

namespace {

Verdict row_diff(const BratteliDiagram& d, Level depth, const UeOptions& o) {
  TelescopingSchedule s = greedy_telescoping(d, depth, o.base, o.budget);
  Verdict v;
  v.criterion = "row_diff";
  v.depth = depth;
  v.direction = "uniquely ergodic";
  std::vector<double> raw;
  for (const auto& x : s.diameters) raw.push_back(to_double(x));
  v.trace = suffix_max(raw);
  nlohmann::json levels = nlohmann::json::array({0});
  for (auto st : s.starts) levels.push_back(st);
  v.witness = {{"starts", s.starts},       {"lengths", s.lengths},       {"diameters", float_array(raw)},
               {"achieved", s.achieved},   {"levels_used", s.levels_used}, {"telescoping", levels}};
  if (s.achieved == depth) {
    v.status = Status::Evidence;
    v.note = "row diameters below 2^-k for k <= " + std::to_string(depth) + "; depth-limited";
  } else if (s.stagnated) {
    v.status = Status::Evidence;
    v.direction = "not uniquely ergodic";
    v.note = "row diameter stalls above 2^-" + std::to_string(s.achieved + 1) + "; depth-limited";
  } else {
    v.status = Status::Inconclusive;
    v.note = "telescoping budget exhausted after " + std::to_string(s.levels_used) + " levels";
  }
  return v;
}

Verdict min_sum(const BratteliDiagram& d, Level depth) {
  Verdict v;
  v.criterion = "min_sum";
  v.depth = depth;
  v.direction = "uniquely ergodic";
  if (auto r = uniform_rows(d)) {
    if (auto lo = d.rule()->eventual_min_entry()) {
      RationalFunction m(*lo, *r);
      DegreeTest t = series_test(m);
      v.witness = degree_witness(t);
      std::vector<double> terms;
      for (Level n = d.tail_start(); n < d.tail_start() + std::min<Level>(depth, 64); ++n)
        terms.push_back(to_double(m(static_cast<long>(n))));
      v.trace = partial_sums(terms);
      if (!t.converges) {
        v.status = Status::Proved;
        v.note = "sum of minimal stochastic entries diverges";
      } else {
        v.status = Status::Inconclusive;
        v.note = "sum of minimal stochastic entries converges; the sufficient condition fails";
      }
      return v;
    }
  }
  std::vector<double> terms;
  for (Level n = 1; n <= depth; ++n) {
    RatMatrix f = d.stochastic_matrix(n);
    terms.push_back(to_double(*std::min_element(f.data().begin(), f.data().end())));
  }
  return numeric_sum_verdict("min_sum", terms, depth, "uniquely ergodic", true);
}

// Symbolic φ(F̃ₙ) for positive constant rules.
std::optional<RationalFunction> symbolic_phi(const DiagramRule& rule) {
  const PolyMatrix& e = rule.entries();
  std::vector<RationalFunction> qs;
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t r = 0; r < e.rows(); ++r) {
      if (i == r) continue;
      for (std::size_t j = 0; j < e.cols(); ++j)
        for (std::size_t s = 0; s < e.cols(); ++s) {
          if (j == s) continue;
          qs.emplace_back(e(i, j) * e(r, s), e(r, j) * e(i, s));
        }
    }
  if (qs.empty()) return RationalFunction(Polynomial(1));
  return eventual_min(qs);
}

void require_primitive_rule(const BratteliDiagram& d) {
  IntMatrix f = d.rule()->evaluate(d.tail_start());
  if (!primitive(f)) throw PrimitivityError("incidence matrices of the rule are not primitive");
}

std::vector<IntMatrix> primitive_levels(const BratteliDiagram& d, Level depth) {
  std::vector<IntMatrix> out;
  for (Level n = 1; n <= depth; ++n) {
    IntMatrix f = d.incidence(n);
    if (!primitive(f)) throw PrimitivityError("F" + std::to_string(n) + " is not primitive");
    out.push_back(std::move(f));
  }
  return out;
}

Verdict phi_like(const BratteliDiagram& d, Level depth, UeCriterion which) {
  const bool ratio = which == UeCriterion::RatioSum;
  const bool tau = which == UeCriterion::TauProduct;
  require_finite_rank(d, depth, to_string(which));
  Verdict v;
  v.criterion = to_string(which);
  v.depth = depth;
  v.direction = "uniquely ergodic";
  if (d.rule() && d.rule()->shape() == DiagramRule::Shape::Constant) {
    require_primitive_rule(d);
    const DiagramRule& rule = *d.rule();
    if (!rule.entries_positive()) {
      v.status = Status::Inconclusive;
      v.note = "rule entries vanish, so the contraction summands are zero";
      return v;
    }
    RationalFunction phi = ratio ? RationalFunction(*rule.eventual_min_entry(), *rule.eventual_max_entry())
                                 : *symbolic_phi(rule);
    DegreeTest t = ratio ? series_test(phi) : sqrt_series_test(phi);
    v.witness = degree_witness(t);
    auto lim = phi.limit();
    std::vector<double> terms;
    for (Level n = d.tail_start(); n < d.tail_start() + std::min<Level>(depth, 64); ++n) {
      double p = to_double(phi(static_cast<long>(n)));
      terms.push_back(ratio ? p : std::sqrt(p));
    }
    if (tau) {
      std::vector<double> prod;
      double acc = 1;
      for (double s : terms) prod.push_back(acc *= (1 - s) / (1 + s));
      v.trace = prod;
    } else {
      v.trace = partial_sums(terms);
    }
    if (!t.converges || (lim && *lim > 0)) {
      v.status = Status::Proved;
      v.note = tau ? "product of contraction coefficients tends to 0" : "series diverges";
    } else {
      v.status = Status::Inconclusive;
      v.note = "series converges; the sufficient condition fails";
    }
    return v;
  }
  std::vector<IntMatrix> fs = primitive_levels(d, depth);
  std::vector<double> terms;
  for (const auto& f : fs) {
    if (ratio) {
      Integer lo = *std::min_element(f.data().begin(), f.data().end());
      Integer hi = *std::max_element(f.data().begin(), f.data().end());
      terms.push_back(to_double(Rational(lo, hi)));
    } else {
      terms.push_back(std::sqrt(to_double(contraction_stats(f).phi)));
    }
  }
  if (!tau) return numeric_sum_verdict(v.criterion, terms, depth, "uniquely ergodic", true);
  // Products of consecutive levels until positive, then the running τ bound.
  std::vector<double> taus;
  IntMatrix block;
  for (const auto& f : fs) {
    block = block.empty() ? f : f * block;
    if (strictly_positive(block)) {
      taus.push_back(contraction_stats(block).tau);
      block = IntMatrix();
    }
  }
  if (taus.empty()) throw PrimitivityError("no positive product of consecutive incidence matrices within depth");
  double acc = 1;
  for (double t : taus) v.trace.push_back(acc *= t);
  v.witness = {{"blocks", taus.size()}, {"taus", float_array(taus)}};
  std::vector<double> logs;
  for (double t : taus) logs.push_back(t > 0 ? -std::log(t) : 50.0);
  int cls = classify_summands(logs);
  if (acc <= 1e-3 && cls >= 0) {
    v.status = Status::Evidence;
    v.note = "bound on the contraction of the product falls to " + std::to_string(acc) + "; depth-limited";
  } else {
    v.status = Status::Inconclusive;
    v.note = "contraction bound does not vanish within depth";
  }
  return v;
}

Verdict norm_growth(const BratteliDiagram& d, Level depth) {
  require_finite_rank(d, depth, "norm_growth");
  Verdict v;
  v.criterion = "norm_growth";
  v.depth = depth;
  v.direction = "uniquely ergodic";
  if (d.rule() && d.rule()->shape() == DiagramRule::Shape::Constant) {
    require_primitive_rule(d);
    Polynomial total = *d.rule()->entry_total();
    v.witness = {{"norm", total.to_string()}, {"degree", total.degree()}};
    for (Level n = d.tail_start(); n < d.tail_start() + std::min<Level>(depth, 64); ++n)
      v.trace.push_back(to_double(Rational(total(static_cast<long>(n)), Integer(static_cast<unsigned long>(n)))));
    if (total.degree() <= 1) {
      v.status = Status::Proved;
      v.note = "||F_n||_1 grows at most linearly";
    } else {
      v.status = Status::Inconclusive;
      v.note = "||F_n||_1 grows faster than linearly";
    }
    return v;
  }
  std::vector<IntMatrix> fs = primitive_levels(d, depth);
  for (std::size_t i = 0; i < fs.size(); ++i)
    v.trace.push_back(to_double(Rational(sum(IntVector(fs[i].data())), Integer(static_cast<unsigned long>(i + 1)))));
  std::size_t half = v.trace.size() / 2;
  double first = half ? *std::max_element(v.trace.begin(), v.trace.begin() + half) : kInf;
  double second = *std::max_element(v.trace.begin() + half, v.trace.end());
  if (half && second <= 2 * first) {
    v.status = Status::Evidence;
    v.note = "||F_n||_1 / n stays bounded through depth " + std::to_string(depth);
  } else {
    v.status = Status::Inconclusive;
    v.note = "||F_n||_1 / n keeps growing";
  }
  return v;
}

}  // namespace

Verdict unique_ergodicity(const BratteliDiagram& d, UeCriterion criterion, Level depth, UeOptions options) {
  if (depth == 0) throw ArgumentError("depth must be positive");
  switch (criterion) {
    case UeCriterion::RowDiff: return row_diff(d, depth, options);
    case UeCriterion::MinSum: return min_sum(d, depth);
    case UeCriterion::TauProduct:
    case UeCriterion::PhiSum:
    case UeCriterion::RatioSum: return phi_like(d, depth, criterion);
    case UeCriterion::NormGrowth: return norm_growth(d, depth);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Determinant criterion

Verdict exact_count_determinant(const BratteliDiagram& d, Level depth, bool skip_singular) {
  if (depth == 0) throw ArgumentError("depth must be positive");
  depth = std::min(depth, d.max_incidence_level());
  const std::size_t K = d.level_size(1);
  for (Level n = 1; n <= depth + 1; ++n)
    if (d.level_size(n) != K) throw RankError("determinant criterion needs |V_n| constant; level " + std::to_string(n) + " differs");
  if (d.rule() && !d.rule()->constant_shape()) throw RankError("determinant criterion needs a constant-shape rule");

  Level base = 1;
  std::vector<Integer> dets;
  for (Level n = 1; n <= depth; ++n) {
    Integer z = determinant(d.incidence(n));
    if (z == 0) {
      if (skip_singular && n == base) {
        ++base;
        continue;
      }
      throw SingularError("F" + std::to_string(n) + " is singular", n);
    }
  }
  if (base > depth) throw SingularError("every tested level is singular", depth);

  Verdict v;
  v.criterion = "determinant";
  v.depth = depth;
  v.direction = "exactly " + std::to_string(K) + " ergodic measures";
  v.witness["rank"] = K;
  v.witness["base"] = base;
  if (base > 1) v.witness["telescoped"] = "levels 1.." + std::to_string(base - 1) + " absorbed into the root";

  std::vector<double> terms;
  for (Level n = base; n <= depth; ++n) {
    Rational z = determinant(d.stochastic_matrix(n));
    terms.push_back(to_double(1 - abs(z)));
  }
  v.trace = partial_sums(terms);

  if (auto view = symbolic_view(d)) {
    std::vector<std::vector<Polynomial>> m(K, std::vector<Polynomial>(K));
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) m[i][j] = view->rule->entries()(i, j);
    Polynomial det = poly_det(m);
    long from = static_cast<long>(std::max(d.tail_start(), base));
    bool nonsingular = !det.is_zero();
    for (Integer n = from; nonsingular && n <= det.root_bound(); ++n) nonsingular = det(n) != 0;
    if (!nonsingular) throw SingularError("rule determinant " + det.to_string() + " vanishes on a covered level", static_cast<Level>(from));
    Polynomial rk = view->r.pow(static_cast<unsigned>(K));
    Polynomial signed_det = det.eventual_sign() < 0 ? -det : det;
    RationalFunction summand(rk - signed_det, rk);
    DegreeTest t = series_test(summand);
    v.witness["det"] = det.to_string();
    v.witness["test"] = degree_witness(t);
    if (t.converges) {
      v.status = Status::Proved;
      v.note = "sum of 1 - |det F_n| converges";
    } else {
      v.status = Status::Refuted;
      v.direction = "fewer than " + std::to_string(K) + " ergodic measures";
      v.note = "sum of 1 - |det F_n| diverges";
    }
    return v;
  }
  double slope = 0;
  int cls = classify_summands(terms, &slope);
  v.witness["slope"] = float_json(slope);
  if (cls < 0) {
    v.status = Status::Evidence;
    v.note = "partial sums level off; depth-limited";
  } else if (cls > 0) {
    v.status = Status::Evidence;
    v.direction = "fewer than " + std::to_string(K) + " ergodic measures";
    v.note = "partial sums keep growing; depth-limited";
  } else {
    v.status = Status::Inconclusive;
    v.note = "partial sums do not separate convergence from divergence";
  }
  return v;
}

// ---------------------------------------------------------------------------
// Partitions

BlockPartition BlockPartition::singleton_blocks() {
  BlockPartition p;
  p.singletons = true;
  return p;
}

BlockPartition BlockPartition::constant(std::vector<std::vector<std::size_t>> sets) {
  BlockPartition p;
  p.levels.push_back({1, std::move(sets), std::nullopt});
  return p;
}

BlockPartition BlockPartition::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("partition document must be a JSON object");
  BlockPartition p;
  if (j.value("natural", std::string()) == "singletons" || j.value("singletons", false)) {
    p.singletons = true;
    return p;
  }
  if (!j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].empty())
    throw SchemaError("partition needs a non-empty 'blocks' array");
  for (const auto& b : j["blocks"]) {
    PartitionLevel lv;
    if (!b.contains("level") || !b["level"].is_number_unsigned()) throw SchemaError("partition block needs a level");
    lv.level = b["level"].get<Level>();
    if (lv.level == 0) throw SchemaError("partition levels start at 1");
    if (!b.contains("sets") || !b["sets"].is_array()) throw SchemaError("partition block needs 'sets'");
    try {
      lv.sets = b["sets"].get<std::vector<std::vector<std::size_t>>>();
      if (b.contains("parents")) lv.parents = b["parents"].get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("partition sets must be arrays of vertex indices: ") + e.what());
    }
    p.levels.push_back(std::move(lv));
  }
  std::sort(p.levels.begin(), p.levels.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
  return p;
}

nlohmann::json BlockPartition::to_json() const {
  if (singletons) return {{"natural", "singletons"}};
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& lv : levels) {
    nlohmann::json b{{"level", lv.level}, {"sets", lv.sets}};
    if (lv.parents) b["parents"] = *lv.parents;
    blocks.push_back(b);
  }
  return {{"blocks", blocks}};
}

namespace {

const PartitionLevel* entry_for(const BlockPartition& p, Level n) {
  const PartitionLevel* found = nullptr;
  for (const auto& lv : p.levels)
    if (lv.level <= n) found = &lv;
  return found;
}

}  // namespace

std::vector<std::vector<std::size_t>> BlockPartition::blocks_at(const BratteliDiagram& d, Level n) const {
  const std::size_t size = d.level_size(n);
  if (singletons) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t v = 0; v < size; ++v) out.push_back({v});
    return out;
  }
  const PartitionLevel* lv = entry_for(*this, n);
  if (!lv) throw PartitionError("no partition covers level " + std::to_string(n));
  std::vector<bool> seen(size, false);
  for (std::size_t i = 0; i < lv->sets.size(); ++i) {
    if (lv->sets[i].empty()) throw PartitionError("block " + std::to_string(i + 1) + " is empty at level " + std::to_string(n));
    for (auto v : lv->sets[i]) {
      if (v >= size) throw PartitionError("vertex " + std::to_string(v) + " does not exist at level " + std::to_string(n));
      if (seen[v]) throw PartitionError("blocks overlap at level " + std::to_string(n));
      seen[v] = true;
    }
  }
  if (lv->sets.empty()) throw PartitionError("partition has no blocks at level " + std::to_string(n));
  return lv->sets;
}

std::vector<std::size_t> BlockPartition::rest_at(const BratteliDiagram& d, Level n) const {
  auto blocks = blocks_at(d, n);
  std::vector<bool> used(d.level_size(n), false);
  for (const auto& b : blocks)
    for (auto v : b) used[v] = true;
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < used.size(); ++v)
    if (!used[v]) out.push_back(v);
  return out;
}

std::optional<std::vector<std::size_t>> BlockPartition::parents_at(Level n) const {
  if (singletons) return std::nullopt;
  const PartitionLevel* lv = entry_for(*this, n);
  if (!lv || lv->level != n) return std::nullopt;
  return lv->parents;
}

// ---------------------------------------------------------------------------
// Vanishing blocks (finite rank)

namespace {

Rational block_mass(const RatMatrix& f, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Rational s = 0;
  for (auto v : rows)
    for (auto w : cols) s += f(v, w);
  return s;
}

Rational row_mass(const RatMatrix& f, std::size_t v, const std::vector<std::size_t>& cols) {
  Rational s = 0;
  for (auto w : cols) s += f(v, w);
  return s;
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& s, std::size_t size) {
  std::vector<bool> in(size, false);
  for (auto v : s) in[v] = true;
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < size; ++v)
    if (!in[v]) out.push_back(v);
  return out;
}

// Partition entries do not change from the tail on.
bool constant_tail(const BlockPartition& p, const BratteliDiagram& d) {
  if (p.singletons) return true;
  return p.levels.back().level <= d.tail_start();
}

Verdict trend_verdict(std::string criterion, std::vector<double> trace, Level depth, const std::string& direction,
                      bool to_zero) {
  Verdict v;
  v.criterion = std::move(criterion);
  v.depth = depth;
  v.direction = direction;
  v.trace = std::move(trace);
  if (v.trace.empty()) {
    v.status = Status::Inconclusive;
    return v;
  }
  double peak = *std::max_element(v.trace.begin(), v.trace.end());
  double last = v.trace.back();
  bool holds = to_zero ? (last <= 1e-9 || last <= 0.05 * peak) : last < 1 - 1e-9;
  v.status = holds ? Status::Evidence : Status::Inconclusive;
  v.note = holds ? "depth-limited trend" : "trend does not settle within depth";
  return v;
}

}  // namespace

nlohmann::json BlocksReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array(), ds = nlohmann::json::array();
  for (const auto& v : c) cs.push_back(v.to_json());
  for (const auto& v : d) ds.push_back(v.to_json());
  nlohmann::json j{{"depth", depth},         {"blocks", blocks},       {"a", a.to_json()},
                   {"b", b.to_json()},       {"c", cs},                {"d", ds},
                   {"e1", e1.to_json()},     {"e2", e2.to_json()},     {"vanishing_candidates", vanishing_candidates}};
  j["regularity_c1"] = regularity_c1 ? float_json(*regularity_c1) : nlohmann::json(nullptr);
  j["measure_count"] = measure_count ? nlohmann::json(*measure_count) : nlohmann::json(nullptr);
  return j;
}

BlocksReport blocks_analysis(const BratteliDiagram& d, const BlockPartition& p, Level depth, std::size_t vanishing_limit) {
  if (depth < 2) throw ArgumentError("blocks analysis needs depth >= 2");
  require_finite_rank(d, depth + 1, "blocks analysis");
  depth = std::min(depth, d.max_incidence_level());
  BlocksReport rep;
  rep.depth = depth;

  std::vector<std::vector<std::vector<std::size_t>>> blocks;
  std::vector<std::vector<std::size_t>> rest;
  for (Level n = 1; n <= depth + 1; ++n) {
    blocks.push_back(p.blocks_at(d, n));
    rest.push_back(p.rest_at(d, n));
  }
  const std::size_t l = blocks.front().size();
  rep.blocks = l;
  rep.a = {"a", Status::Proved, "blocks non-empty", depth, {}, {{"blocks", l}}, "every block is non-empty"};
  bool same = true;
  for (const auto& lv : blocks) {
    if (lv.size() != l) same = false;
    for (std::size_t i = 0; same && i < l; ++i) same = lv[i].size() == blocks.front()[i].size();
  }
  same = same && rest.back().size() == rest.front().size();
  rep.b = {"b", same ? Status::Proved : Status::Refuted, "block sizes constant", depth, {}, {}, ""};
  if (!same) throw PartitionError("block sizes change between levels; telescope or supply a regular partition");

  std::vector<RatMatrix> F;
  for (Level n = 1; n <= depth; ++n) F.push_back(d.stochastic_matrix(n));
  const auto view = symbolic_view(d);
  const bool symbolic = view && constant_tail(p, d);
  const auto& tail_blocks = blocks.back();
  const auto& tail_rest = rest.back();

  // (c) and (d) per block.
  for (std::size_t j = 0; j < l; ++j) {
    std::vector<double> cterms, dterms;
    for (Level n = 1; n <= depth; ++n) {
      const RatMatrix& f = F[n - 1];
      const auto& up = blocks[n][j];
      const auto& down = blocks[n - 1][j];
      Rational least = 1;
      for (auto v : up) least = std::min(least, row_mass(f, v, down));
      cterms.push_back(to_double(1 - least));
      Rational widest = 0;
      for (auto v : up)
        for (auto v2 : up) {
          Rational s = 0;
          for (std::size_t w = 0; w < f.cols(); ++w) s += abs(f(v, w) - f(v2, w));
          widest = std::max(widest, s);
        }
      dterms.push_back(to_double(widest));
    }
    std::string label = "block " + std::to_string(j + 1);
    Verdict c;
    if (symbolic) {
      auto sums = view->rule->row_sums(VertexSelector::of(tail_blocks[j]), VertexSelector::of(tail_blocks[j]));
      std::vector<RationalFunction> gaps;
      for (const auto& s : *sums) gaps.emplace_back(view->r - s, view->r);
      RationalFunction worst = eventual_max(gaps);
      DegreeTest t = series_test(worst);
      c = {"c", t.converges ? Status::Proved : Status::Refuted, label + ": sum of 1 - min block mass converges",
           depth, partial_sums(cterms), degree_witness(t), ""};
    } else {
      c = numeric_sum_verdict("c", cterms, depth, label + ": sum of 1 - min block mass converges", false);
      // Here convergence supports the condition.
      double slope = 0;
      int cls = classify_summands(cterms, &slope);
      bool zero = std::all_of(cterms.begin(), cterms.end(), [](double x) { return x == 0; });
      c.status = (zero || cls < 0) ? Status::Evidence : Status::Inconclusive;
    }
    rep.c.push_back(c);

    Verdict dv;
    if (tail_blocks[j].size() == 1 && (symbolic || p.singletons || blocks.front()[j].size() == 1)) {
      dv = {"d", Status::Proved, label + ": row differences vanish", depth, dterms, {}, "single-vertex block"};
    } else if (symbolic) {
      std::vector<RationalFunction> diffs;
      for (auto v : tail_blocks[j])
        for (auto v2 : tail_blocks[j]) {
          RationalFunction s(Polynomial(0));
          for (std::size_t w = 0; w < view->size(); ++w) s = s + eventual_abs(view->entry(v, w) - view->entry(v2, w));
          diffs.push_back(s);
        }
      RationalFunction worst = eventual_max(diffs);
      auto lim = worst.limit();
      bool ok = lim && *lim == 0;
      dv = {"d", ok ? Status::Proved : Status::Refuted, label + ": row differences vanish", depth, dterms,
            {{"max_difference", worst.to_string()}}, ""};
    } else {
      dv = trend_verdict("d", dterms, depth, label + ": row differences vanish", true);
    }
    rep.d.push_back(dv);
  }

  // (e1): volumes of simplices spanned by block averages and each outside vertex vector.
  {
    std::vector<double> trace;
    bool vacuous = true;
    RatMatrix g;
    for (Level n = 2; n <= depth + 1; ++n) {
      g = g.empty() ? F[0] : F[n - 2] * g;
      if (rest[n - 1].empty()) {
        trace.push_back(0);
        continue;
      }
      vacuous = false;
      const std::size_t dim = g.cols();
      std::vector<std::vector<double>> avg;
      for (const auto& b : blocks[n - 1]) {
        std::vector<double> a(dim, 0.0);
        for (auto w : b)
          for (std::size_t c = 0; c < dim; ++c) a[c] += to_double(g(w, c)) / static_cast<double>(b.size());
        avg.push_back(std::move(a));
      }
      double worst = 0;
      for (auto w : rest[n - 1]) {
        Eigen::MatrixXd e(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(avg.size()));
        for (std::size_t i = 0; i < avg.size(); ++i)
          for (std::size_t c = 0; c < dim; ++c)
            e(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = avg[i][c] - to_double(g(w, c));
        double gram = (e.transpose() * e).determinant();
        double fact = std::tgamma(static_cast<double>(avg.size()) + 1);
        worst = std::max(worst, std::sqrt(std::max(gram, 0.0)) / fact);
      }
      trace.push_back(worst);
    }
    if (vacuous)
      rep.e1 = {"e1", Status::Proved, "simplex volumes vanish", depth, trace, {}, "no vertices outside the blocks"};
    else
      rep.e1 = trend_verdict("e1", trace, depth, "simplex volumes vanish", true);
  }

  // (e2): outside rows keep mass below 1 - C in each block.
  {
    std::vector<double> trace;
    bool vacuous = true;
    for (Level n = 1; n <= depth; ++n) {
      double worst = 0;
      for (auto v : rest[n]) {
        vacuous = false;
        for (const auto& b : blocks[n - 1]) worst = std::max(worst, to_double(row_mass(F[n - 1], v, b)));
      }
      trace.push_back(worst);
    }
    if (vacuous) {
      rep.e2 = {"e2", Status::Proved, "outside rows bounded away from 1", depth, trace, {}, "no vertices outside the blocks"};
    } else if (symbolic && !tail_rest.empty()) {
      std::optional<Rational> top;
      for (const auto& b : tail_blocks) {
        auto sums = view->rule->row_sums(VertexSelector::of(tail_rest), VertexSelector::of(b));
        for (const auto& s : *sums) {
          auto lim = RationalFunction(s, view->r).limit();
          if (lim && (!top || *lim > *top)) top = *lim;
        }
      }
      bool ok = top && *top < 1;
      rep.e2 = {"e2", ok ? Status::Proved : Status::Refuted, "outside rows bounded away from 1", depth, trace,
                {{"limit", top ? rational_json(*top) : nlohmann::json(nullptr)}}, ""};
    } else {
      rep.e2 = trend_verdict("e2", trace, depth, "outside rows bounded away from 1", false);
    }
  }

  // Regularity constant for U = V_{n,j}.
  {
    double c1 = kInf;
    for (std::size_t j = 0; j < l; ++j)
      for (Level n = 1; n <= depth; ++n) {
        auto out = complement(blocks[n - 1][j], F[n - 1].cols());
        Rational lo, hi;
        bool first = true;
        for (auto v : blocks[n][j]) {
          Rational s = row_mass(F[n - 1], v, out);
          if (first || s < lo) lo = s;
          if (first || s > hi) hi = s;
          first = false;
        }
        if (hi > 0) c1 = std::min(c1, to_double(lo / hi));
      }
    if (c1 < kInf) rep.regularity_c1 = c1;
  }

  // Vanishing-block candidates among small vertex subsets.
  {
    const std::size_t K = d.level_size(depth + 1);
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> scan = [&](std::size_t from) {
      if (!pick.empty() && pick.size() < K) {
        auto out = complement(pick, K);
        bool vanishing = false;
        if (view) {
          auto sums = view->rule->row_sums(VertexSelector::of(pick), VertexSelector::of(out));
          RationalFunction total(Polynomial(0));
          for (const auto& s : *sums) total = total + RationalFunction(s, view->r);
          auto lim = total.limit();
          vanishing = lim && *lim == 0;
        } else {
          std::vector<double> tr;
          for (Level n = 1; n <= depth; ++n) tr.push_back(to_double(block_mass(F[n - 1], pick, out)));
          double mid = tr[tr.size() / 2];
          vanishing = tr.back() < 1e-2 && tr.back() <= mid;
        }
        if (vanishing) rep.vanishing_candidates.push_back(pick);
      }
      if (pick.size() == vanishing_limit) return;
      for (std::size_t v = from; v < K; ++v) {
        pick.push_back(v);
        scan(v + 1);
        pick.pop_back();
      }
    };
    scan(0);
  }

  auto holds = [](const Verdict& v) { return v.status == Status::Proved || v.status == Status::Evidence; };
  bool all = holds(rep.a) && holds(rep.b) && holds(rep.e1) && holds(rep.e2);
  for (const auto& v : rep.c) all = all && holds(v);
  for (const auto& v : rep.d) all = all && holds(v);
  if (all) rep.measure_count = l;
  return rep;
}

// ---------------------------------------------------------------------------
// Chains

nlohmann::json ChainReport::to_json() const {
  return {{"depth", depth},
          {"chain_count", prefixes.size()},
          {"prefixes", prefixes},
          {"degenerate", degenerate},
          {"c1", c1.to_json()},
          {"d1", d1.to_json()},
          {"e1", e1.to_json()},
          {"measure_claim", measure_claim}};
}

ChainReport chain_analysis(const BratteliDiagram& d, const BlockPartition& p, Level depth) {
  if (depth < 2) throw ArgumentError("chain analysis needs depth >= 2");
  depth = std::min(depth, d.max_incidence_level());
  ChainReport rep;
  rep.depth = depth;
  const bool chain_rule = d.rule() && d.rule()->shape() == DiagramRule::Shape::CountableChain && p.singletons;

  std::vector<std::vector<std::vector<std::size_t>>> blocks;
  for (Level n = 1; n <= depth + 1; ++n) blocks.push_back(p.blocks_at(d, n));

  // parent[n][j]: block of level n (1-based index n) feeding block j of level n+1.
  std::vector<std::vector<std::optional<std::size_t>>> parent(depth + 1);
  for (Level n = 1; n <= depth; ++n) {
    const auto& up = blocks[n];
    const auto& down = blocks[n - 1];
    auto& out = parent[n];
    out.assign(up.size(), std::nullopt);
    if (auto given = p.parents_at(n + 1)) {
      if (given->size() != up.size()) throw PartitionError("parents list does not match the blocks at level " + std::to_string(n + 1));
      for (std::size_t j = 0; j < up.size(); ++j) {
        if ((*given)[j] >= down.size()) throw PartitionError("parent index out of range at level " + std::to_string(n + 1));
        out[j] = (*given)[j];
      }
      continue;
    }
    if (chain_rule) {
      for (std::size_t j = 0; j < up.size(); ++j) out[j] = std::min<std::size_t>(j, down.size() - 1);
      continue;
    }
    if (!p.singletons && up.size() == down.size()) {
      for (std::size_t j = 0; j < up.size(); ++j) out[j] = j;
      continue;
    }
    // Dominant feeding block; a tie goes to the block with the same index, if
    // it is among the tied ones, and otherwise leaves the block without a parent.
    IntMatrix f = d.incidence(n);
    for (std::size_t j = 0; j < up.size(); ++j) {
      std::vector<Integer> feed(down.size(), Integer(0));
      for (std::size_t i = 0; i < down.size(); ++i)
        for (auto v : up[j])
          for (auto w : down[i]) feed[i] += f(v, w);
      const auto top_it = std::max_element(feed.begin(), feed.end());
      if (*top_it <= 0) continue;
      const auto ties = std::count(feed.begin(), feed.end(), *top_it);
      if (ties == 1) out[j] = static_cast<std::size_t>(top_it - feed.begin());
      else if (j < feed.size() && feed[j] == *top_it) out[j] = j;
    }
  }

  // Trace every block at level `depth` back to level 1.
  const std::size_t top = blocks[depth - 1].size();
  for (std::size_t j = 0; j < top; ++j) {
    std::vector<std::size_t> chain{j};
    bool ok = true;
    for (Level n = depth - 1; n >= 1 && ok; --n) {
      auto par = parent[n][chain.back()];
      if (!par) ok = false;
      else chain.push_back(*par);
    }
    if (!ok) continue;
    std::reverse(chain.begin(), chain.end());
    // Heights along the chain's subdiagram; a single path is degenerate.
    const auto& first = blocks[0][chain[0]];
    IntVector h;
    for (auto v : first) h.push_back(d.root_edges()[v]);
    for (Level n = 1; n < depth; ++n) {
      IntMatrix f = d.incidence(n);
      const auto& rows = blocks[n][chain[n]];
      const auto& cols = blocks[n - 1][chain[n - 1]];
      IntVector next(rows.size(), Integer(0));
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) next[r] += f(rows[r], cols[c]) * h[c];
      h = std::move(next);
    }
    if (h.size() == 1 && h.front() == 1) {
      ++rep.degenerate;
      continue;
    }
    rep.prefixes.push_back(std::move(chain));
  }

  // (c1): mass leaving the parent block, maximised over blocks.
  std::vector<double> cterms, dterms, e11, e12;
  bool rest_empty = true;
  for (Level n = 1; n <= depth; ++n) {
    RatMatrix f = d.stochastic_matrix(n);
    Rational worst = 0, widest = 0;
    for (std::size_t j = 0; j < blocks[n].size(); ++j) {
      auto par = parent[n][j];
      if (!par) continue;
      auto out = complement(blocks[n - 1][*par], f.cols());
      for (auto v : blocks[n][j]) worst = std::max(worst, row_mass(f, v, out));
      for (auto v : blocks[n][j])
        for (auto v2 : blocks[n][j]) {
          Rational s = 0;
          for (std::size_t w = 0; w < f.cols(); ++w) s += abs(f(v, w) - f(v2, w));
          widest = std::max(widest, s);
        }
    }
    cterms.push_back(to_double(worst));
    dterms.push_back(to_double(widest));
    auto rest_up = p.rest_at(d, n + 1);
    auto rest_down = p.rest_at(d, n);
    double lo11 = 1, hi12 = 0;
    for (auto v : rest_up) {
      rest_empty = false;
      lo11 = std::min(lo11, to_double(row_mass(f, v, complement(rest_down, f.cols()))));
      for (const auto& b : blocks[n - 1]) hi12 = std::max(hi12, to_double(row_mass(f, v, b)));
    }
    e11.push_back(lo11);
    e12.push_back(hi12);
  }

  auto pw = d.rule() ? d.rule()->parent_weight() : std::nullopt;
  auto r = uniform_rows(d);
  bool identity_parents = chain_rule || (p.singletons && d.rule() && d.rule()->shape() == DiagramRule::Shape::Constant);
  if (pw && r && identity_parents) {
    DegreeTest t = series_test(RationalFunction(*r - *pw, *r));
    rep.c1 = {"c1", t.converges ? Status::Proved : Status::Refuted, "sum of mass leaving parent blocks converges", depth,
              partial_sums(cterms), degree_witness(t), ""};
  } else {
    rep.c1 = numeric_sum_verdict("c1", cterms, depth, "sum of mass leaving parent blocks converges", false);
    double slope = 0;
    int cls = classify_summands(cterms, &slope);
    bool zero = std::all_of(cterms.begin(), cterms.end(), [](double x) { return x == 0; });
    rep.c1.status = (zero || cls < 0) ? Status::Evidence : Status::Inconclusive;
  }
  if (p.singletons || std::all_of(dterms.begin(), dterms.end(), [](double x) { return x == 0; }))
    rep.d1 = {"d1", Status::Proved, "row differences within blocks vanish", depth, dterms, {}, "single-vertex blocks"};
  else
    rep.d1 = trend_verdict("d1", dterms, depth, "row differences within blocks vanish", true);
  if (rest_empty) {
    rep.e1 = {"e1", Status::Proved, "outside rows feed the blocks", depth, {}, {}, "no vertices outside the blocks"};
  } else {
    rep.e1 = trend_verdict("e1", e12, depth, "outside rows feed the blocks", false);
    rep.e1.witness = {{"e1.1", float_array(e11)}, {"e1.2", float_array(e12)}};
    if (e11.back() < 1 - 1e-2) rep.e1.status = Status::Inconclusive;
  }

  auto holds = [](const Verdict& v) { return v.status == Status::Proved || v.status == Status::Evidence; };
  if (rep.prefixes.empty()) {
    rep.measure_claim = "none";
  } else if (holds(rep.c1) && holds(rep.d1) && holds(rep.e1)) {
    // A chain set that keeps branching with depth is countably infinite.
    bool growing = !d.bounded_rank(depth + 1) && rep.prefixes.size() >= depth;
    rep.measure_claim = growing ? "countable" : "finite:" + std::to_string(rep.prefixes.size());
  } else {
    rep.measure_claim = "undetermined";
  }
  return rep;
}

}  // namespace bratteli
