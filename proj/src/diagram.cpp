#include "bratteli/diagram.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

namespace bratteli {

namespace {

constexpr Level kUnbounded = Level(1) << 40;

Integer json_integer(const nlohmann::json& j, const char* what) {
  if (j.is_number_integer()) return Integer(std::to_string(j.get<long long>()));
  if (j.is_number_unsigned()) return Integer(std::to_string(j.get<unsigned long long>()));
  if (j.is_string()) {
    try {
      return Integer(j.get<std::string>(), 10);
    } catch (const std::exception&) {
    }
  }
  throw SchemaError(std::string("expected an integer for ") + what + ", got " + j.dump());
}

IntMatrix json_matrix(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SchemaError(what + " must be a non-empty array of rows");
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].empty()) throw SchemaError(what + ": every row must be a non-empty array");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw SchemaError(what + ": ragged rows");
  }
  IntMatrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      m(r, c) = json_integer(j[r][c], what.c_str());
      if (m(r, c) < 0) throw StructureError(what + ": negative edge multiplicity");
    }
  return m;
}

nlohmann::json integer_json(const Integer& z) {
  if (z.fits_slong_p()) return z.get_si();
  return z.get_str();
}

nlohmann::json matrix_to_json(const IntMatrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(integer_json(m(r, c)));
    out.push_back(row);
  }
  return out;
}

// Entry reference for symbolic lookups: a fixed index or the last vertex.
struct Ref {
  bool last = false;
  std::size_t index = 0;
};

std::vector<Ref> refs_of(const VertexSelector& s, std::size_t constant_size, bool growing) {
  std::vector<Ref> out;
  switch (s.kind) {
    case VertexSelector::Kind::Indices:
      for (auto i : s.indices) out.push_back({false, i});
      break;
    case VertexSelector::Kind::Last:
      out.push_back({true, 0});
      break;
    case VertexSelector::Kind::All:
      if (growing) return {};
      for (std::size_t i = 0; i < constant_size; ++i) out.push_back({false, i});
      break;
  }
  return out;
}

}  // namespace

VertexSelector VertexSelector::from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j == "all") return all();
    if (j == "last") return last();
    throw SchemaError("vertex selector must be an index list, \"all\" or \"last\"");
  }
  if (!j.is_array()) throw SchemaError("vertex selector must be an index list, \"all\" or \"last\"");
  std::vector<std::size_t> ids;
  for (const auto& x : j) {
    if (!x.is_number_integer() || x.get<long long>() < 0) throw SchemaError("vertex index must be a non-negative integer");
    ids.push_back(x.get<std::size_t>());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return of(std::move(ids));
}

nlohmann::json VertexSelector::to_json() const {
  switch (kind) {
    case Kind::All: return "all";
    case Kind::Last: return "last";
    case Kind::Indices: return indices;
  }
  return "all";
}

std::vector<std::size_t> VertexSelector::resolve(std::size_t size) const {
  switch (kind) {
    case Kind::All: {
      std::vector<std::size_t> out(size);
      std::iota(out.begin(), out.end(), 0);
      return out;
    }
    case Kind::Last:
      return {size - 1};
    case Kind::Indices:
      for (auto i : indices)
        if (i >= size) throw ArgumentError("vertex index " + std::to_string(i) + " out of range for a level of size " + std::to_string(size));
      return indices;
  }
  return {};
}

// ---------------------------------------------------------------------------
// DiagramRule

DiagramRule DiagramRule::constant(PolyMatrix entries, Level from_level) {
  if (entries.empty()) throw SchemaError("constant rule needs entries");
  DiagramRule r;
  r.shape_ = Shape::Constant;
  r.from_level_ = from_level;
  r.entries_ = std::move(entries);
  for (const auto& p : r.entries_.data())
    if (!p.nonnegative_from(static_cast<long>(from_level)))
      throw StructureError("rule entry " + p.to_string() + " is negative for some n >= " + std::to_string(from_level));
  return r;
}

DiagramRule DiagramRule::pascal(Level from_level) {
  DiagramRule r;
  r.shape_ = Shape::Pascal;
  r.from_level_ = from_level;
  return r;
}

DiagramRule DiagramRule::countable_chain(Polynomial a, Level from_level) {
  if (!a.positive_from(static_cast<long>(from_level)))
    throw StructureError("countable_chain weight " + a.to_string() + " must be positive for all n >= " + std::to_string(from_level));
  DiagramRule r;
  r.shape_ = Shape::CountableChain;
  r.from_level_ = from_level;
  r.a_ = std::move(a);
  return r;
}

DiagramRule DiagramRule::restricted(const DiagramRule& parent, VertexSelector selector) {
  DiagramRule r;
  r.shape_ = Shape::Restricted;
  r.from_level_ = parent.from_level_;
  r.parent_ = std::make_shared<const DiagramRule>(parent);
  r.selector_ = std::move(selector);
  return r;
}

bool DiagramRule::constant_shape() const {
  switch (shape_) {
    case Shape::Constant: return true;
    case Shape::Pascal:
    case Shape::CountableChain: return false;
    case Shape::Restricted: return selector_.kind != VertexSelector::Kind::All || parent_->constant_shape();
  }
  return false;
}

std::size_t DiagramRule::rows_at(Level n) const {
  switch (shape_) {
    case Shape::Constant: return entries_.rows();
    case Shape::Pascal:
    case Shape::CountableChain: return n + 2;
    case Shape::Restricted:
      return selector_.resolve(parent_->rows_at(n)).size();
  }
  return 0;
}

std::size_t DiagramRule::cols_at(Level n) const {
  switch (shape_) {
    case Shape::Constant: return entries_.cols();
    case Shape::Pascal:
    case Shape::CountableChain: return n + 1;
    case Shape::Restricted:
      return selector_.resolve(parent_->cols_at(n)).size();
  }
  return 0;
}

IntMatrix DiagramRule::evaluate(Level n) const {
  if (n < from_level_) throw DepthError("rule does not cover level " + std::to_string(n), n);
  switch (shape_) {
    case Shape::Constant: {
      IntMatrix m(entries_.rows(), entries_.cols());
      Integer nn(static_cast<unsigned long>(n));
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = entries_(r, c)(nn);
      return m;
    }
    case Shape::Pascal: {
      IntMatrix m(n + 2, n + 1);
      for (std::size_t k = 0; k < n + 2; ++k) {
        if (k <= n) m(k, k) = 1;
        if (k >= 1) m(k, k - 1) = 1;
      }
      return m;
    }
    case Shape::CountableChain: {
      Integer a = a_(Integer(static_cast<unsigned long>(n)));
      IntMatrix m(n + 2, n + 1, Integer(1));
      for (std::size_t k = 0; k <= n; ++k) m(k, k) = a;
      m(n + 1, n) = a;
      return m;
    }
    case Shape::Restricted: {
      IntMatrix full = parent_->evaluate(n);
      auto rows = selector_.resolve(full.rows());
      auto cols = selector_.resolve(full.cols());
      IntMatrix m(rows.size(), cols.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = full(rows[r], cols[c]);
      return m;
    }
  }
  return {};
}

namespace {

// Symbolic entry f̃(row, col) for large n.
std::optional<Polynomial> symbolic_entry(const DiagramRule& rule, Ref row, Ref col) {
  using Shape = DiagramRule::Shape;
  switch (rule.shape()) {
    case Shape::Constant: {
      std::size_t r = row.last ? rule.entries().rows() - 1 : row.index;
      std::size_t c = col.last ? rule.entries().cols() - 1 : col.index;
      if (r >= rule.entries().rows() || c >= rule.entries().cols()) return std::nullopt;
      return rule.entries()(r, c);
    }
    case Shape::Pascal:
      if (row.last && col.last) return Polynomial(1);
      if (row.last || col.last) return Polynomial(0);
      return Polynomial((col.index == row.index || col.index + 1 == row.index) ? 1 : 0);
    case Shape::CountableChain:
      if (row.last && col.last) return rule.chain_weight();
      if (row.last || col.last) return Polynomial(1);
      return row.index == col.index ? rule.chain_weight() : Polynomial(1);
    case Shape::Restricted:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::vector<Polynomial>> DiagramRule::row_sums(const VertexSelector& rows, const VertexSelector& cols) const {
  if (shape_ == Shape::Restricted) {
    if (!parent_->constant_shape()) return std::nullopt;
    // Reduce to the parent by translating indices through the selector.
    auto prow = selector_.resolve(parent_->rows_at(from_level_));
    auto pcol = selector_.resolve(parent_->cols_at(from_level_));
    auto translate = [](const VertexSelector& s, const std::vector<std::size_t>& map) {
      std::vector<std::size_t> ids;
      for (auto i : s.resolve(map.size())) ids.push_back(map[i]);
      return VertexSelector::of(ids);
    };
    return parent_->row_sums(translate(rows, prow), translate(cols, pcol));
  }
  const bool growing = !constant_shape();
  const std::size_t nrows = growing ? 0 : entries_.rows();
  const std::size_t ncols = growing ? 0 : entries_.cols();
  std::vector<Ref> row_refs = refs_of(rows, nrows, growing);
  std::vector<Polynomial> out;
  if (growing && rows.kind == VertexSelector::Kind::All) {
    // Only uniform profiles are representable.
    if (cols.kind == VertexSelector::Kind::All && shape_ == Shape::CountableChain) return std::vector<Polynomial>{a_ + Polynomial::variable()};
    return std::nullopt;
  }
  for (const Ref& r : row_refs) {
    Polynomial acc;
    if (cols.kind == VertexSelector::Kind::All && growing) {
      if (shape_ == Shape::CountableChain)
        acc = a_ + Polynomial::variable();
      else
        acc = Polynomial((r.last || r.index == 0) ? 1 : 2);
    } else {
      for (const Ref& c : refs_of(cols, ncols, growing)) {
        auto e = symbolic_entry(*this, r, c);
        if (!e) return std::nullopt;
        acc = acc + *e;
      }
    }
    out.push_back(acc);
  }
  return out;
}

std::optional<Polynomial> DiagramRule::uniform_row_sum() const {
  if (shape_ == Shape::Pascal) return std::nullopt;
  if (shape_ == Shape::CountableChain) return a_ + Polynomial::variable();
  if (shape_ == Shape::Restricted && !parent_->constant_shape()) {
    // Single retained vertex per level in a countable chain keeps only the weight.
    if (parent_->shape_ == Shape::CountableChain && selector_.kind != VertexSelector::Kind::All &&
        (selector_.kind == VertexSelector::Kind::Last || selector_.indices.size() == 1))
      return parent_->a_;
    return std::nullopt;
  }
  auto sums = row_sums(VertexSelector::all(), VertexSelector::all());
  if (!sums || sums->empty()) return std::nullopt;
  for (const auto& p : *sums)
    if (!(p == sums->front())) return std::nullopt;
  return sums->front();
}

std::optional<Polynomial> DiagramRule::eventual_min_entry() const {
  switch (shape_) {
    case Shape::Constant: {
      std::vector<RationalFunction> fs(entries_.data().begin(), entries_.data().end());
      return eventual_min(fs).numerator();
    }
    case Shape::Pascal: return Polynomial(0);
    case Shape::CountableChain: return compare_eventually(a_, Polynomial(1)) < 0 ? a_ : Polynomial(1);
    case Shape::Restricted:
      if (parent_->shape_ == Shape::Constant) {
        auto rows = selector_.resolve(parent_->entries_.rows());
        auto cols = selector_.resolve(parent_->entries_.cols());
        std::vector<RationalFunction> fs;
        for (auto r : rows)
          for (auto c : cols) fs.emplace_back(parent_->entries_(r, c));
        return eventual_min(fs).numerator();
      }
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Polynomial> DiagramRule::eventual_max_entry() const {
  switch (shape_) {
    case Shape::Constant: {
      std::vector<RationalFunction> fs(entries_.data().begin(), entries_.data().end());
      return eventual_max(fs).numerator();
    }
    case Shape::Pascal: return Polynomial(1);
    case Shape::CountableChain: return compare_eventually(a_, Polynomial(1)) > 0 ? a_ : Polynomial(1);
    case Shape::Restricted: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Polynomial> DiagramRule::entry_total() const {
  switch (shape_) {
    case Shape::Constant: {
      Polynomial acc;
      for (const auto& p : entries_.data()) acc = acc + p;
      return acc;
    }
    case Shape::Pascal: return Polynomial(2) * (Polynomial::variable() + Polynomial(1));
    case Shape::CountableChain: return (Polynomial::variable() + Polynomial(2)) * (a_ + Polynomial::variable());
    case Shape::Restricted: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Polynomial> DiagramRule::parent_weight() const {
  if (shape_ == Shape::CountableChain) return a_;
  if (shape_ == Shape::Constant && entries_.square()) {
    for (std::size_t i = 1; i < entries_.rows(); ++i)
      if (!(entries_(i, i) == entries_(0, 0))) return std::nullopt;
    return entries_(0, 0);
  }
  return std::nullopt;
}

bool DiagramRule::entries_positive() const {
  const long from = static_cast<long>(from_level_);
  switch (shape_) {
    case Shape::Constant:
      return std::all_of(entries_.data().begin(), entries_.data().end(),
                         [&](const Polynomial& p) { return p.positive_from(from); });
    case Shape::Pascal: return false;
    case Shape::CountableChain: return a_.positive_from(from);
    case Shape::Restricted:
      if (parent_->shape_ == Shape::CountableChain) return parent_->entries_positive();
      if (parent_->shape_ == Shape::Constant) {
        auto rows = selector_.resolve(parent_->entries_.rows());
        auto cols = selector_.resolve(parent_->entries_.cols());
        for (auto r : rows)
          for (auto c : cols)
            if (!parent_->entries_(r, c).positive_from(from)) return false;
        return true;
      }
      return false;
  }
  return false;
}

nlohmann::json DiagramRule::to_json() const {
  nlohmann::json j;
  j["from_level"] = from_level_;
  switch (shape_) {
    case Shape::Constant: {
      j["shape"] = "constant";
      j["rows"] = entries_.rows();
      j["cols"] = entries_.cols();
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t r = 0; r < entries_.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < entries_.cols(); ++c) row.push_back(entries_(r, c).to_string());
        rows.push_back(row);
      }
      j["entries"] = rows;
      break;
    }
    case Shape::Pascal:
      j["shape"] = "pascal";
      break;
    case Shape::CountableChain:
      j["shape"] = "countable_chain";
      j["a"] = a_.to_string();
      break;
    case Shape::Restricted:
      j["shape"] = "restricted";
      j["parent"] = parent_->to_json();
      j["selector"] = selector_.to_json();
      break;
  }
  return j;
}

DiagramRule DiagramRule::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("rule must be an object");
  Level from = 1;
  if (j.contains("from_level")) {
    if (!j["from_level"].is_number_integer() || j["from_level"].get<long long>() < 1)
      throw SchemaError("rule.from_level must be a positive integer");
    from = j["from_level"].get<Level>();
  }
  if (!j.contains("shape") || !j["shape"].is_string()) throw SchemaError("rule.shape must be a string");
  const std::string shape = j["shape"];
  if (shape == "pascal") return pascal(from);
  if (shape == "countable_chain") {
    if (!j.contains("a") || !j["a"].is_string()) throw SchemaError("countable_chain rule needs an expression 'a'");
    return countable_chain(parse_expression(j["a"].get<std::string>()), from);
  }
  if (shape == "restricted") {
    if (!j.contains("parent") || !j.contains("selector")) throw SchemaError("restricted rule needs parent and selector");
    auto r = restricted(from_json(j["parent"]), VertexSelector::from_json(j["selector"]));
    r.from_level_ = from;
    return r;
  }
  if (shape != "constant") throw SchemaError("unknown rule shape '" + shape + "'");
  if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
    throw SchemaError("constant rule needs a non-empty 'entries' matrix");
  const auto& e = j["entries"];
  std::size_t rows = e.size();
  std::size_t cols = e[0].is_array() ? e[0].size() : 0;
  if (cols == 0) throw SchemaError("rule entries must be rows of expressions");
  if (j.contains("rows") && j["rows"] != rows) throw SchemaError("rule.rows disagrees with entries");
  if (j.contains("cols") && j["cols"] != cols) throw SchemaError("rule.cols disagrees with entries");
  PolyMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!e[r].is_array() || e[r].size() != cols) throw SchemaError("rule entries: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& x = e[r][c];
      if (x.is_string())
        m(r, c) = parse_expression(x.get<std::string>());
      else if (x.is_number_integer())
        m(r, c) = Polynomial(static_cast<long>(x.get<long long>()));
      else
        throw SchemaError("rule entries must be expressions");
    }
  }
  return constant(std::move(m), from);
}

// ---------------------------------------------------------------------------
// BratteliDiagram

struct BratteliDiagram::Memo {
  std::mutex mu;
  std::vector<IntVector> heights;  // heights[n] for n = 0, 1, ...
};

BratteliDiagram::BratteliDiagram(std::string name, IntVector root_edges, std::vector<IntMatrix> prefix,
                                 std::optional<DiagramRule> rule, nlohmann::json order)
    : name_(std::move(name)),
      root_edges_(std::move(root_edges)),
      prefix_(std::move(prefix)),
      rule_(std::move(rule)),
      order_(std::move(order)),
      memo_(std::make_shared<Memo>()) {
  if (root_edges_.empty()) throw StructureError("root_edges must be non-empty");
  for (const auto& r : root_edges_)
    if (r <= 0) throw StructureError("root_edges must be positive");
  if (rule_ && rule_->from_level() > prefix_.size() + 1)
    throw SchemaError("rule.from_level " + std::to_string(rule_->from_level()) + " leaves a gap after " +
                      std::to_string(prefix_.size()) + " explicit levels");
  if (!order_.is_null()) {
    if (!order_.is_object() || !order_.contains("scheme") || !order_["scheme"].is_string())
      throw SchemaError("order must be an object with a scheme");
    const std::string scheme = order_["scheme"];
    if (scheme != "consecutive" && scheme != "reverse" && scheme != "explicit")
      throw SchemaError("unknown order scheme '" + scheme + "'");
    if (scheme == "explicit" && !order_.contains("data")) throw SchemaError("explicit order needs data");
  }
  Level check = prefix_.size();
  if (rule_) check = std::max<Level>(check, tail_start() + 8);
  validate(check);
  if (rule_ && rule_->shape() == DiagramRule::Shape::Constant) {
    // Beyond every root bound a row (column) vanishes only if all its polynomials are zero.
    const auto& e = rule_->entries();
    for (std::size_t r = 0; r < e.rows(); ++r) {
      bool any = false;
      for (std::size_t c = 0; c < e.cols(); ++c) any = any || !e(r, c).is_zero();
      if (!any) throw StructureError("rule row " + std::to_string(r) + " is identically zero");
    }
    for (std::size_t c = 0; c < e.cols(); ++c) {
      bool any = false;
      for (std::size_t r = 0; r < e.rows(); ++r) any = any || !e(r, c).is_zero();
      if (!any) throw StructureError("rule column " + std::to_string(c) + " is identically zero");
    }
    Integer bound = 0;
    for (const auto& p : e.data()) bound = std::max(bound, p.root_bound());
    if (bound > Integer(static_cast<unsigned long>(check)) && bound < 4096) validate(bound.get_ui() + 1);
  }
}

Level BratteliDiagram::max_incidence_level() const { return rule_ ? kUnbounded : prefix_.size(); }
Level BratteliDiagram::max_level() const { return max_incidence_level() + 1; }

Level BratteliDiagram::tail_start() const {
  if (!rule_) return prefix_.size() + 1;
  return std::max<Level>(prefix_.size() + 1, rule_->from_level());
}

void BratteliDiagram::require_level(Level n) const {
  if (n == 0 || n <= prefix_.size() || rule_covers(n)) return;
  throw DepthError("incidence matrix F" + std::to_string(n) + " is not materializable (diagram has " +
                       std::to_string(prefix_.size()) + " explicit levels and no covering rule)",
                   n);
}

std::size_t BratteliDiagram::level_size(Level n) const {
  if (n == 0) return 1;
  if (n == 1) return root_edges_.size();
  Level k = n - 1;
  if (k <= prefix_.size()) return prefix_[k - 1].rows();
  require_level(k);
  return rule_->rows_at(k);
}

IntMatrix BratteliDiagram::incidence(Level n) const {
  if (n == 0) {
    IntMatrix m(root_edges_.size(), 1);
    for (std::size_t i = 0; i < root_edges_.size(); ++i) m(i, 0) = root_edges_[i];
    return m;
  }
  require_level(n);
  if (n <= prefix_.size()) return prefix_[n - 1];
  return rule_->evaluate(n);
}

IntVector BratteliDiagram::heights(Level n) const {
  std::lock_guard<std::mutex> lock(memo_->mu);
  auto& h = memo_->heights;
  if (h.empty()) h.push_back(IntVector{Integer(1)});
  while (h.size() <= n) {
    Level k = h.size() - 1;
    h.push_back(incidence(k) * h.back());
  }
  return h[n];
}

IntVector BratteliDiagram::relative_heights(Level n) const {
  IntVector h = heights(n);
  Integer g = gcd_of(h);
  for (auto& x : h) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
  return h;
}

namespace {

ScaledMatrix stochastic_from(const IntMatrix& f, const IntVector& eta) {
  IntVector d = f * eta;
  for (const auto& x : d)
    if (x == 0) throw StructureError("vertex without incoming edges");
  bool uniform = std::all_of(eta.begin(), eta.end(), [&](const Integer& x) { return x == eta.front(); }) &&
                 std::all_of(d.begin(), d.end(), [&](const Integer& x) { return x == d.front(); });
  if (uniform) return ScaledMatrix(f, d.front() / eta.front());
  Integer lcm = 1;
  for (const auto& x : d) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.get_mpz_t());
  IntMatrix num(f.rows(), f.cols());
  for (std::size_t v = 0; v < f.rows(); ++v) {
    Integer scale = lcm / d[v];
    for (std::size_t w = 0; w < f.cols(); ++w) num(v, w) = f(v, w) * eta[w] * scale;
  }
  return ScaledMatrix(std::move(num), lcm);
}

}  // namespace

ScaledMatrix BratteliDiagram::stochastic_scaled(Level n) const {
  return stochastic_from(incidence(n), relative_heights(n));
}

RatMatrix BratteliDiagram::stochastic_matrix(Level n) const {
  RatMatrix f = stochastic_scaled(n).to_rational();
  for (std::size_t r = 0; r < f.rows(); ++r) {
    Rational s = 0;
    for (std::size_t c = 0; c < f.cols(); ++c) s += f(r, c);
    if (s != 1) throw StructureError("stochastic row does not sum to 1 at level " + std::to_string(n));
  }
  return f;
}

std::optional<IntMatrix> BratteliDiagram::stationary_matrix() const {
  std::optional<IntMatrix> m;
  if (rule_) {
    if (rule_->shape() != DiagramRule::Shape::Constant) return std::nullopt;
    for (const auto& p : rule_->entries().data())
      if (!p.is_constant()) return std::nullopt;
    m = rule_->evaluate(rule_->from_level());
  } else if (!prefix_.empty()) {
    m = prefix_.front();
  } else {
    return std::nullopt;
  }
  if (!m->square() || m->rows() != root_edges_.size()) return std::nullopt;
  for (const auto& p : prefix_)
    if (!(p == *m)) return std::nullopt;
  return m;
}

std::optional<std::size_t> BratteliDiagram::bounded_rank(Level depth) const {
  if (rule_ && depth >= tail_start() && !rule_->constant_shape()) return std::nullopt;
  std::size_t best = 0;
  Level top = std::min(depth, max_level());
  for (Level n = 1; n <= top; ++n) best = std::max(best, level_size(n));
  return best;
}

ConnectivityReport BratteliDiagram::connectivity(Level depth) const {
  // Union-find over vertices of levels 1..depth, joined by edges between levels.
  depth = std::min(depth, max_level());
  std::vector<std::size_t> offset{0, 0};
  for (Level n = 1; n <= depth; ++n) offset.push_back(offset.back() + level_size(n));
  std::vector<std::size_t> parent(offset.back());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Level n = 1; n < depth; ++n) {
    IntMatrix f = incidence(n);
    for (std::size_t v = 0; v < f.rows(); ++v)
      for (std::size_t w = 0; w < f.cols(); ++w)
        if (f(v, w) > 0) parent[find(offset[n + 1] + v)] = find(offset[n] + w);
  }
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < parent.size(); ++i) roots.insert(find(i));
  return {depth, roots.size() <= 1, roots.size()};
}

bool strictly_positive(const IntMatrix& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](const Integer& x) { return x > 0; });
}

namespace {

IntMatrix boolean(const IntMatrix& m) {
  IntMatrix b(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) b(r, c) = m(r, c) > 0 ? 1 : 0;
  return b;
}

}  // namespace

SimplicityReport BratteliDiagram::simplicity(Level depth) const {
  SimplicityReport rep;
  depth = std::min(depth, max_incidence_level());
  rep.depth = depth;
  rep.simple_through_depth = true;
  for (Level n = 1; n < depth; ++n) {
    IntMatrix prod = boolean(incidence(n));
    bool ok = strictly_positive(prod);
    for (Level m = n + 1; !ok && m <= depth; ++m) {
      prod = boolean(boolean(incidence(m)) * prod);
      ok = strictly_positive(prod);
    }
    if (!ok) {
      // Levels near the depth limit may simply need more room.
      if (n + 4 <= depth || n == 1) {
        rep.simple_through_depth = false;
        rep.failing_level = n;
      }
      break;
    }
  }
  rep.proved = rule_ && rule_->entries_positive() && rep.simple_through_depth;
  return rep;
}

void BratteliDiagram::validate(Level depth) const {
  depth = std::min(depth, max_incidence_level());
  std::size_t cols = root_edges_.size();
  for (Level n = 1; n <= depth; ++n) {
    IntMatrix f = incidence(n);
    if (f.cols() != cols)
      throw StructureError("F" + std::to_string(n) + " has " + std::to_string(f.cols()) + " columns but level " +
                           std::to_string(n) + " has " + std::to_string(cols) + " vertices");
    for (std::size_t r = 0; r < f.rows(); ++r) {
      bool any = false;
      for (std::size_t c = 0; c < f.cols(); ++c) {
        if (f(r, c) < 0) throw StructureError("negative entry in F" + std::to_string(n));
        any = any || f(r, c) > 0;
      }
      if (!any) throw StructureError("F" + std::to_string(n) + " has a zero row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < f.cols(); ++c) {
      bool any = false;
      for (std::size_t r = 0; r < f.rows(); ++r) any = any || f(r, c) > 0;
      if (!any) throw StructureError("F" + std::to_string(n) + " has a zero column " + std::to_string(c));
    }
    cols = f.rows();
  }
}

BratteliDiagram BratteliDiagram::with_order(nlohmann::json order) const {
  return BratteliDiagram(name_, root_edges_, prefix_, rule_, std::move(order));
}

BratteliDiagram BratteliDiagram::with_name(std::string name) const {
  return BratteliDiagram(std::move(name), root_edges_, prefix_, rule_, order_);
}

BratteliDiagram BratteliDiagram::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("diagram document must be a JSON object");
  std::string name = j.value("name", std::string());
  std::vector<IntMatrix> prefix;
  if (j.contains("levels")) {
    if (!j["levels"].is_array()) throw SchemaError("'levels' must be an array of matrices");
    for (std::size_t i = 0; i < j["levels"].size(); ++i)
      prefix.push_back(json_matrix(j["levels"][i], "levels[" + std::to_string(i) + "]"));
  }
  std::optional<DiagramRule> rule;
  if (j.contains("rule") && !j["rule"].is_null()) rule = DiagramRule::from_json(j["rule"]);
  if (prefix.empty() && !rule) throw SchemaError("diagram needs explicit levels or a rule");
  IntVector root;
  if (j.contains("root_edges")) {
    if (!j["root_edges"].is_array() || j["root_edges"].empty()) throw SchemaError("'root_edges' must be a non-empty array");
    for (const auto& x : j["root_edges"]) root.push_back(json_integer(x, "root_edges"));
  } else {
    std::size_t size = !prefix.empty() ? prefix.front().cols() : rule->cols_at(rule->from_level());
    root.assign(size, Integer(1));
  }
  nlohmann::json order = j.contains("order") ? j["order"] : nlohmann::json(nullptr);
  return BratteliDiagram(std::move(name), std::move(root), std::move(prefix), std::move(rule), std::move(order));
}

BratteliDiagram BratteliDiagram::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open diagram file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("diagram file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json BratteliDiagram::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  nlohmann::json root = nlohmann::json::array();
  for (const auto& r : root_edges_) root.push_back(integer_json(r));
  j["root_edges"] = root;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& m : prefix_) levels.push_back(matrix_to_json(m));
  j["levels"] = levels;
  if (rule_) j["rule"] = rule_->to_json();
  if (!order_.is_null()) j["order"] = order_;
  return j;
}

// ---------------------------------------------------------------------------
// LevelCursor

LevelCursor::LevelCursor(const BratteliDiagram& d, Level start)
    : d_(&d), level_(start), eta_(d.relative_heights(start)) {
  load_incidence();
}

void LevelCursor::load_incidence() { incidence_ = d_->incidence(level_); }

ScaledMatrix LevelCursor::stochastic() const { return stochastic_from(incidence_, eta_); }

void LevelCursor::stochastic_into(ScaledMatrix& out) {
  const std::size_t rows = incidence_.rows(), cols = incidence_.cols();
  sums_.resize(rows);
  Integer lcm = 1, scale;
  for (std::size_t v = 0; v < rows; ++v) {
    mpz_ptr s = sums_[v].get_mpz_t();
    mpz_set_ui(s, 0);
    for (std::size_t w = 0; w < cols; ++w) mpz_addmul(s, incidence_(v, w).get_mpz_t(), eta_[w].get_mpz_t());
    if (sums_[v] == 0) throw StructureError("vertex without incoming edges");
    mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), s);
  }
  if (scaled_.rows() != rows || scaled_.cols() != cols) scaled_ = IntMatrix(rows, cols);
  for (std::size_t v = 0; v < rows; ++v) {
    mpz_divexact(scale.get_mpz_t(), lcm.get_mpz_t(), sums_[v].get_mpz_t());
    for (std::size_t w = 0; w < cols; ++w) {
      mpz_ptr x = scaled_(v, w).get_mpz_t();
      mpz_mul(x, incidence_(v, w).get_mpz_t(), eta_[w].get_mpz_t());
      mpz_mul(x, x, scale.get_mpz_t());
    }
  }
  out.assign(scaled_, lcm);
}

void LevelCursor::advance() {
  const std::size_t rows = incidence_.rows();
  sums_.resize(rows);
  Integer g = 0;
  for (std::size_t v = 0; v < rows; ++v) {
    mpz_ptr s = sums_[v].get_mpz_t();
    mpz_set_ui(s, 0);
    for (std::size_t w = 0; w < incidence_.cols(); ++w) mpz_addmul(s, incidence_(v, w).get_mpz_t(), eta_[w].get_mpz_t());
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), s);
  }
  for (auto& x : sums_) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
  eta_.swap(sums_);
  ++level_;
  load_incidence();
}

// ---------------------------------------------------------------------------

void validate_path(const BratteliDiagram& d, const FinitePath& path) {
  std::size_t prev = 0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const Level n = k + 1;
    const PathEdge& e = path[k];
    if (e.source != prev) throw ArgumentError("path edge " + std::to_string(n) + " does not start where the previous edge ends");
    IntMatrix f = d.incidence(n - 1);
    if (e.target >= f.rows() || e.source >= f.cols()) throw ArgumentError("path edge " + std::to_string(n) + " leaves the diagram");
    if (Integer(static_cast<unsigned long>(e.slot)) >= f(e.target, e.source))
      throw ArgumentError("path edge " + std::to_string(n) + " uses a missing multiplicity slot");
    prev = e.target;
  }
}

BratteliDiagram telescope(const BratteliDiagram& d, const std::vector<Level>& levels) {
  if (levels.size() < 2) throw ArgumentError("telescoping needs at least the levels 0 and n1");
  if (levels.front() != 0) throw ArgumentError("telescoping sequence must start at level 0");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1]) throw ArgumentError("telescoping sequence must be strictly increasing");
  if (levels.back() > d.max_level())
    throw DepthError("level " + std::to_string(levels.back()) + " is not materializable", levels.back());
  IntVector root = d.heights(levels[1]);
  std::vector<IntMatrix> prefix;
  for (std::size_t k = 1; k + 1 < levels.size(); ++k) {
    IntMatrix prod = d.incidence(levels[k]);
    for (Level n = levels[k] + 1; n < levels[k + 1]; ++n) prod = d.incidence(n) * prod;
    prefix.push_back(std::move(prod));
  }
  return BratteliDiagram(d.name().empty() ? "telescoped" : d.name() + " (telescoped)", std::move(root),
                         std::move(prefix));
}

}  // namespace bratteli
