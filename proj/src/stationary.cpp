#include "bratteli/stationary.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

#include "bratteli/report.hpp"

namespace bratteli {

// ---------------------------------------------------------------------------
// Classes

ClassDecomposition class_decomposition(const IntMatrix& m) {
  if (!m.square() || m.rows() == 0) throw ArgumentError("class decomposition needs a non-empty square matrix");
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    bool row = false, col = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (m(i, j) < 0 || m(j, i) < 0) throw ArgumentError("incidence matrix has a negative entry");
      row = row || m(i, j) > 0;
      col = col || m(j, i) > 0;
    }
    if (!row || !col) throw ArgumentError("incidence matrix has a zero row or column at vertex " + std::to_string(i));
  }

  // Tarjan; components come out sinks first.
  ClassDecomposition dec;
  dec.class_of.assign(n, 0);
  std::vector<long> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  long counter = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (m(v, w) == 0) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] != index[v]) return;
    std::vector<std::size_t> cls;
    std::size_t w;
    do {
      w = stack.back();
      stack.pop_back();
      on_stack[w] = false;
      cls.push_back(w);
    } while (w != v);
    std::sort(cls.begin(), cls.end());
    for (auto x : cls) dec.class_of[x] = dec.classes.size();
    dec.classes.push_back(std::move(cls));
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);

  const std::size_t k = dec.classes.size();
  dec.reaches.assign(k, std::vector<bool>(k, false));
  for (std::size_t a = 0; a < k; ++a) {
    dec.reaches[a][a] = true;
    for (auto v : dec.classes[a])
      for (std::size_t w = 0; w < n; ++w) {
        if (m(v, w) == 0) continue;
        std::size_t b = dec.class_of[w];
        if (b == a) continue;
        for (std::size_t c = 0; c < k; ++c)
          if (dec.reaches[b][c]) dec.reaches[a][c] = true;
      }
  }
  for (const auto& cls : dec.classes) dec.permutation.insert(dec.permutation.end(), cls.begin(), cls.end());
  return dec;
}

std::vector<std::pair<std::size_t, std::size_t>> ClassDecomposition::order_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t b = 0; b < size(); ++b)
      if (a != b && reaches[a][b]) out.emplace_back(a, b);
  return out;
}

IntMatrix ClassDecomposition::permuted(const IntMatrix& m) const {
  IntMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < permutation.size(); ++i)
    for (std::size_t j = 0; j < permutation.size(); ++j) out(i, j) = m(permutation[i], permutation[j]);
  return out;
}

IntMatrix ClassDecomposition::block(const IntMatrix& m, std::size_t a) const {
  const auto& c = classes.at(a);
  IntMatrix out(c.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = m(c[i], c[j]);
  return out;
}

nlohmann::json ClassDecomposition::to_json() const {
  nlohmann::json order = nlohmann::json::array();
  for (auto [a, b] : order_pairs()) order.push_back({a, b});
  return {{"classes", classes}, {"order", order}, {"permutation", permutation}};
}

// ---------------------------------------------------------------------------
// Spectral radius

namespace {

// min/max of (By)_i / y_i for positive y, minus one.
std::pair<Rational, Rational> cw_bounds(const IntMatrix& b, const RatVector& y) {
  Rational lo, hi;
  for (std::size_t i = 0; i < b.rows(); ++i) {
    Rational s = 0;
    for (std::size_t j = 0; j < b.cols(); ++j) s += b(i, j) * y[j];
    Rational q = s / y[i];
    if (i == 0 || q < lo) lo = q;
    if (i == 0 || q > hi) hi = q;
  }
  return {lo - 1, hi - 1};
}

// Positive left eigenvector for the integer k, if one exists.
std::optional<RatVector> positive_left_vector(const IntMatrix& a, const Integer& k) {
  RatMatrix shifted = to_rational(a);
  for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) -= k;
  auto basis = left_null_space(shifted);
  if (basis.size() != 1) return std::nullopt;
  RatVector x = basis.front();
  if (x.front() < 0)
    for (auto& v : x) v = -v;
  if (std::any_of(x.begin(), x.end(), [](const Rational& v) { return v <= 0; })) return std::nullopt;
  return x;
}

bool try_exact(const IntMatrix& a, SpectralInterval& s) {
  mpz_class lo = s.lower.get_num(), hi = s.upper.get_num();
  mpz_cdiv_q(lo.get_mpz_t(), s.lower.get_num_mpz_t(), s.lower.get_den_mpz_t());
  mpz_fdiv_q(hi.get_mpz_t(), s.upper.get_num_mpz_t(), s.upper.get_den_mpz_t());
  if (hi - lo > 3) return false;
  for (Integer k = lo; k <= hi; ++k) {
    if (k < 0) continue;
    if (positive_left_vector(a, k)) {
      s.exact = k;
      s.lower = s.upper = Rational(k);
      s.converged = true;
      return true;
    }
  }
  return false;
}

}  // namespace

SpectralInterval spectral_radius(const IntMatrix& a, const Rational& width, std::size_t max_iterations) {
  if (!a.square() || a.rows() == 0) throw ArgumentError("spectral radius needs a square block");
  if (a.rows() > 1) {
    auto dec = class_decomposition(a);
    if (dec.size() != 1) throw ArgumentError("spectral radius needs an irreducible block");
  }
  const std::size_t n = a.rows();
  IntMatrix b = a;
  for (std::size_t i = 0; i < n; ++i) b(i, i) += 1;

  SpectralInterval s;
  std::vector<double> y(n, 1.0);
  RatVector yr(n, Rational(1));
  std::tie(s.lower, s.upper) = cw_bounds(b, yr);
  if (try_exact(a, s) || s.width() <= width) {
    s.converged = true;
    return s;
  }
  Eigen::MatrixXd bd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) bd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(Rational(b(i, j)));
  Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  // Any positive y gives valid bounds, so a floating iterate is rounded and checked exactly.
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    v = bd * v;
    v /= v.maxCoeff();
    s.iterations = it;
    if (it % 8 != 0 && it != max_iterations) continue;
    for (std::size_t i = 0; i < n; ++i) yr[i] = rational_from_double(std::max(v(static_cast<Eigen::Index>(i)), 1e-300));
    auto [lo, hi] = cw_bounds(b, yr);
    s.lower = std::max(s.lower, lo);
    s.upper = std::min(s.upper, hi);
    if (try_exact(a, s)) return s;
    if (s.width() <= width) {
      s.converged = true;
      return s;
    }
  }
  // Exact refinement past double precision.
  for (std::size_t it = 0; it < 256; ++it) {
    RatVector next(n, Rational(0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[i] += b(i, j) * yr[j];
    yr = std::move(next);
    auto [lo, hi] = cw_bounds(b, yr);
    s.lower = std::max(s.lower, lo);
    s.upper = std::min(s.upper, hi);
    ++s.iterations;
    if (s.width() <= width) {
      s.converged = true;
      return s;
    }
  }
  return s;
}

SpectralInterval certified_spectral_radius(const IntMatrix& block, const Rational& width) {
  SpectralInterval s = spectral_radius(block, width);
  if (!s.converged)
    throw ConvergenceError("spectral interval width " + std::to_string(to_double(s.width())) + " after " +
                           std::to_string(s.iterations) + " iterations");
  return s;
}

nlohmann::json SpectralInterval::to_json() const {
  nlohmann::json j{{"class", class_id},
                   {"lower", rational_json(lower)},
                   {"upper", rational_json(upper)},
                   {"iterations", iterations},
                   {"converged", converged}};
  j["exact"] = exact ? nlohmann::json(to_string(*exact)) : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Distinguished classes

const char* to_string(Distinction d) {
  switch (d) {
    case Distinction::Distinguished: return "distinguished";
    case Distinction::NotDistinguished: return "not_distinguished";
    case Distinction::Unresolved: return "unresolved";
  }
  return "unresolved";
}

DistinguishedReport distinguished_classes(const ClassDecomposition& dec, const std::vector<SpectralInterval>& radii) {
  if (radii.size() != dec.size()) throw ArgumentError("one spectral interval per class is required");
  DistinguishedReport rep;
  rep.status.assign(dec.size(), Distinction::Distinguished);
  for (auto [a, b] : dec.order_pairs()) {
    const auto& ra = radii[a];
    const auto& rb = radii[b];
    Verdict v;
    v.criterion = "rho_" + std::to_string(a) + " > rho_" + std::to_string(b);
    v.direction = "strict spectral dominance";
    v.witness = {{"above", ra.to_json()}, {"below", rb.to_json()}};
    if (ra.lower > rb.upper) {
      v.status = Status::Proved;
    } else if (ra.upper <= rb.lower) {
      v.status = Status::Refuted;
    } else {
      v.status = Status::Inconclusive;
      v.note = "spectral intervals overlap";
    }
    if (v.status == Status::Refuted) rep.status[a] = Distinction::NotDistinguished;
    else if (v.status == Status::Inconclusive && rep.status[a] == Distinction::Distinguished)
      rep.status[a] = Distinction::Unresolved;
    rep.comparisons.push_back({{a, b}, std::move(v)});
  }
  return rep;
}

std::vector<std::size_t> DistinguishedReport::distinguished() const {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < status.size(); ++a)
    if (status[a] == Distinction::Distinguished) out.push_back(a);
  return out;
}

bool DistinguishedReport::resolved() const {
  return std::none_of(status.begin(), status.end(), [](Distinction d) { return d == Distinction::Unresolved; });
}

nlohmann::json DistinguishedReport::to_json() const {
  nlohmann::json st = nlohmann::json::array(), cmp = nlohmann::json::array();
  for (auto s : status) st.push_back(to_string(s));
  for (const auto& [pair, v] : comparisons) cmp.push_back({{"above", pair.first}, {"below", pair.second}, {"verdict", v.to_json()}});
  return {{"status", st}, {"distinguished", distinguished()}, {"comparisons", cmp}};
}

// ---------------------------------------------------------------------------
// Measures

namespace {

std::vector<std::size_t> descendants(const ClassDecomposition& dec, std::size_t a) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < dec.class_of.size(); ++v) {
    std::size_t b = dec.class_of[v];
    if (b != a && dec.reaches[a][b]) out.push_back(v);
  }
  return out;
}

std::vector<double> left_perron_approx(const IntMatrix& a, double rho) {
  const auto n = static_cast<Eigen::Index>(a.rows());
  Eigen::MatrixXd bt(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      bt(j, i) = to_double(Rational(a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))) + (i == j ? 1.0 : 0.0);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd next = bt * x;
    next /= next.maxCoeff();
    double diff = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (diff < 1e-15) break;
  }
  (void)rho;
  return {x.data(), x.data() + n};
}

}  // namespace

RatVector StationaryMeasure::values(const BratteliDiagram& d, Level n) const {
  if (!exact) throw ArgumentError("measure values are exact only for integer spectral radius");
  if (rho == 0) throw ArgumentError("a class with zero spectral radius carries no tower values");
  IntVector h = d.heights(n);
  Integer power;
  mpz_pow_ui(power.get_mpz_t(), rho.get_num_mpz_t(), static_cast<unsigned long>(n - 1));
  RatVector out(h.size(), Rational(0));
  for (std::size_t v = 0; v < h.size(); ++v)
    if (x[v] != 0) {
      out[v] = x[v] * h[v] / power;
      out[v].canonicalize();
    }
  return out;
}

std::vector<double> StationaryMeasure::values_approx(const BratteliDiagram& d, Level n) const {
  if (exact) return to_double(values(d, n));
  IntVector h = d.heights(n);
  std::vector<double> out(h.size(), 0.0);
  // Scale heights relative to ρⁿ⁻¹ in logs to survive deep levels.
  const double lr = std::log(rho_approx) * static_cast<double>(n - 1);
  for (std::size_t v = 0; v < h.size(); ++v) {
    if (x_approx[v] <= 0) continue;
    long exp = 0;
    double mant = mpz_get_d_2exp(&exp, h[v].get_mpz_t());
    out[v] = x_approx[v] * std::exp(std::log(mant) + static_cast<double>(exp) * std::log(2.0) - lr);
  }
  return out;
}

nlohmann::json StationaryMeasure::to_json(const BratteliDiagram& d, Level depth) const {
  nlohmann::json j{{"class", class_id},
                   {"kind", kind == Kind::Finite ? "finite" : "infinite"},
                   {"exact", exact},
                   {"support", support},
                   {"unbounded", unbounded}};
  j["rho"] = exact ? rational_json(rho) : float_json(rho_approx);
  j["x"] = exact ? rational_array(x) : float_array(x_approx);
  if (!exact) j["residual"] = float_json(residual);
  if (kind == Kind::Finite) j["normalization"] = float_json(normalization);
  nlohmann::json table = nlohmann::json::array();
  bool trivial = exact ? rho == 0 : rho_approx == 0;
  if (!trivial)
    for (Level n = 1; n <= depth; ++n) table.push_back(exact ? rational_array(values(d, n)) : float_array(values_approx(d, n)));
  j["values"] = table;
  return j;
}

std::size_t StationaryReport::finite_count() const {
  return static_cast<std::size_t>(std::count_if(measures.begin(), measures.end(),
                                                [](const auto& m) { return m.kind == StationaryMeasure::Kind::Finite; }));
}

nlohmann::json StationaryReport::to_json(const BratteliDiagram& d, Level depth) const {
  nlohmann::json rs = nlohmann::json::array(), ms = nlohmann::json::array();
  for (const auto& r : radii) rs.push_back(r.to_json());
  for (const auto& m : measures) ms.push_back(m.to_json(d, depth));
  return {{"classes", classes.to_json()},
          {"intervals", rs},
          {"distinction", distinction.to_json()},
          {"finite_measures", finite_count()},
          {"measures", ms}};
}

StationaryReport stationary_measures(const BratteliDiagram& d) {
  auto m = d.stationary_matrix();
  if (!m) throw ArgumentError("stationary analysis needs a diagram with one repeated square incidence matrix");
  StationaryReport rep;
  rep.classes = class_decomposition(*m);
  const auto& dec = rep.classes;
  for (std::size_t a = 0; a < dec.size(); ++a) {
    SpectralInterval s = spectral_radius(dec.block(*m, a));
    s.class_id = a;
    rep.radii.push_back(std::move(s));
  }
  rep.distinction = distinguished_classes(dec, rep.radii);
  if (!rep.distinction.resolved())
    throw InconclusiveError("spectral intervals overlap; distinguished classes cannot be certified");

  const std::size_t n = m->rows();
  const IntVector& root = d.root_edges();
  for (std::size_t a = 0; a < dec.size(); ++a) {
    StationaryMeasure sm;
    sm.class_id = a;
    const bool finite = rep.distinction.status[a] == Distinction::Distinguished;
    sm.kind = finite ? StationaryMeasure::Kind::Finite : StationaryMeasure::Kind::Infinite;
    const auto& cls = dec.classes[a];
    const auto below = descendants(dec, a);
    const auto& radius = rep.radii[a];
    sm.exact = radius.exact.has_value();
    IntMatrix blk = dec.block(*m, a);

    if (sm.exact) {
      sm.rho = *radius.exact;
      sm.rho_approx = to_double(sm.rho);
      sm.x.assign(n, Rational(0));
      RatVector xa = sm.rho == 0 ? RatVector{Rational(1)} : *positive_left_vector(blk, *radius.exact);
      for (std::size_t i = 0; i < cls.size(); ++i) sm.x[cls[i]] = xa[i];
      if (finite && !below.empty()) {
        // x_D (ρI − F̃_DD) = x_α F̃_αD, transposed for solve().
        const std::size_t k = below.size();
        RatMatrix lhs(k, k);
        RatVector rhs(k, Rational(0));
        for (std::size_t i = 0; i < k; ++i) {
          for (std::size_t j = 0; j < k; ++j) lhs(i, j) = -Rational((*m)(below[j], below[i]));
          lhs(i, i) += sm.rho;
          for (auto v : cls) rhs[i] += sm.x[v] * (*m)(v, below[i]);
        }
        RatVector xd = solve(lhs, rhs);
        for (std::size_t i = 0; i < k; ++i) sm.x[below[i]] = xd[i];
      }
      if (finite) {
        Rational total = 0;
        for (std::size_t v = 0; v < n; ++v) total += sm.x[v] * root[v];
        sm.normalization = to_double(total);
        for (auto& v : sm.x) v /= total;
      }
      sm.x_approx = to_double(sm.x);
    } else {
      sm.rho_approx = to_double((radius.lower + radius.upper) / 2);
      sm.x_approx.assign(n, 0.0);
      auto xa = left_perron_approx(blk, sm.rho_approx);
      for (std::size_t i = 0; i < cls.size(); ++i) sm.x_approx[cls[i]] = xa[i];
      if (finite && !below.empty()) {
        const auto k = static_cast<Eigen::Index>(below.size());
        Eigen::MatrixXd lhs(k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < k; ++i) {
          for (Eigen::Index j = 0; j < k; ++j)
            lhs(i, j) = -to_double(Rational((*m)(below[static_cast<std::size_t>(j)], below[static_cast<std::size_t>(i)])));
          lhs(i, i) += sm.rho_approx;
          for (auto v : cls) rhs(i) += sm.x_approx[v] * to_double(Rational((*m)(v, below[static_cast<std::size_t>(i)])));
        }
        Eigen::VectorXd xd = lhs.partialPivLu().solve(rhs);
        for (Eigen::Index i = 0; i < k; ++i) sm.x_approx[below[static_cast<std::size_t>(i)]] = std::max(0.0, xd(i));
      }
      if (finite) {
        double total = 0;
        for (std::size_t v = 0; v < n; ++v) total += sm.x_approx[v] * to_double(Rational(root[v]));
        sm.normalization = total;
        for (auto& v : sm.x_approx) v /= total;
      }
      double res = 0;
      for (std::size_t w = 0; w < n; ++w) {
        if (!finite && dec.class_of[w] != a) continue;
        double s = 0;
        for (std::size_t v = 0; v < n; ++v) s += sm.x_approx[v] * to_double(Rational((*m)(v, w)));
        res = std::max(res, std::abs(s - sm.rho_approx * sm.x_approx[w]));
      }
      sm.residual = res;
    }
    for (std::size_t v = 0; v < n; ++v)
      if (sm.exact ? sm.x[v] > 0 : sm.x_approx[v] > 0) sm.support.push_back(v);
    if (!finite) sm.unbounded = below;
    rep.measures.push_back(std::move(sm));
  }
  return rep;
}

TowerMeasure to_tower_measure(std::shared_ptr<const BratteliDiagram> d, const StationaryMeasure& m) {
  if (!m.exact || m.kind != StationaryMeasure::Kind::Finite)
    throw ArgumentError("only finite measures with an integer spectral radius convert exactly");
  const BratteliDiagram* raw = d.get();
  return TowerMeasure::closed_form(
      std::move(d), [m, raw](Level n) { return m.values(*raw, n); }, "class " + std::to_string(m.class_id));
}

}  // namespace bratteli
