#pragma once

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bratteli/exact.hpp"
#include "bratteli/polynomial.hpp"

namespace bratteli {

using PolyMatrix = Matrix<Polynomial>;

// A set of vertex indices chosen per level: fixed indices, the last vertex, or all.
struct VertexSelector {
  enum class Kind { Indices, Last, All };
  Kind kind = Kind::All;
  std::vector<std::size_t> indices;

  static VertexSelector all() { return {Kind::All, {}}; }
  static VertexSelector last() { return {Kind::Last, {}}; }
  static VertexSelector of(std::vector<std::size_t> ids) { return {Kind::Indices, std::move(ids)}; }
  static VertexSelector from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Indices at a level with `size` vertices; throws ArgumentError when out of range.
  std::vector<std::size_t> resolve(std::size_t size) const;
};

// Closed-form incidence matrices F̃ₙ for n ≥ from_level.
class DiagramRule {
 public:
  enum class Shape { Constant, Pascal, CountableChain, Restricted };

  static DiagramRule constant(PolyMatrix entries, Level from_level);
  static DiagramRule pascal(Level from_level);
  // (n+2)×(n+1): aₙ on the diagonal and at (n+1, n), 1 elsewhere.
  static DiagramRule countable_chain(Polynomial a, Level from_level);
  // Submatrix F̃ₙ[rows(n+1), cols(n)] of `parent`, both picked by one selector.
  static DiagramRule restricted(const DiagramRule& parent, VertexSelector selector);

  Shape shape() const { return shape_; }
  Level from_level() const { return from_level_; }
  std::size_t rows_at(Level n) const;
  std::size_t cols_at(Level n) const;
  bool constant_shape() const;
  IntMatrix evaluate(Level n) const;

  const PolyMatrix& entries() const { return entries_; }
  const Polynomial& chain_weight() const { return a_; }

  // Symbolic views valid for all large n; nullopt when not representable.
  std::optional<Polynomial> uniform_row_sum() const;
  std::optional<Polynomial> eventual_min_entry() const;
  std::optional<Polynomial> eventual_max_entry() const;
  std::optional<Polynomial> entry_total() const;
  // For each selected row, Σ over selected columns of f̃ (rows at level n+1, columns at n).
  std::optional<std::vector<Polynomial>> row_sums(const VertexSelector& rows, const VertexSelector& cols) const;
  // f̃ between each vertex and its natural parent, when uniform across rows.
  std::optional<Polynomial> parent_weight() const;
  // Every entry is a polynomial positive for all n ≥ from_level.
  bool entries_positive() const;

  nlohmann::json to_json() const;
  static DiagramRule from_json(const nlohmann::json& j);

 private:
  Shape shape_ = Shape::Constant;
  Level from_level_ = 1;
  PolyMatrix entries_;
  Polynomial a_;
  std::shared_ptr<const DiagramRule> parent_;
  VertexSelector selector_;
};

struct ConnectivityReport {
  Level depth = 0;
  bool connected = true;
  std::size_t components = 1;
};

struct SimplicityReport {
  Level depth = 0;
  // Every tested level reaches a strictly positive product before `depth`.
  bool simple_through_depth = false;
  // Symbolically certified for every level (positive rule entries).
  bool proved = false;
  std::optional<Level> failing_level;
};

class BratteliDiagram {
 public:
  BratteliDiagram() = default;
  BratteliDiagram(std::string name, IntVector root_edges, std::vector<IntMatrix> prefix,
                  std::optional<DiagramRule> rule = std::nullopt,
                  nlohmann::json order = nullptr);

  static BratteliDiagram from_json(const nlohmann::json& j);
  static BratteliDiagram load(const std::string& path);
  nlohmann::json to_json() const;

  const std::string& name() const { return name_; }
  const IntVector& root_edges() const { return root_edges_; }
  const std::vector<IntMatrix>& prefix() const { return prefix_; }
  const std::optional<DiagramRule>& rule() const { return rule_; }
  const nlohmann::json& order() const { return order_; }
  BratteliDiagram with_order(nlohmann::json order) const;
  BratteliDiagram with_name(std::string name) const;

  Level prefix_depth() const { return prefix_.size(); }
  bool infinite() const { return rule_.has_value(); }
  // Deepest n with F̃ₙ available (huge when a rule is attached).
  Level max_incidence_level() const;
  // Deepest level V_n that exists.
  Level max_level() const;
  // First level governed by the rule alone.
  Level tail_start() const;
  bool rule_covers(Level n) const { return rule_ && n > prefix_.size() && n >= rule_->from_level(); }

  std::size_t level_size(Level n) const;
  // F̃ₙ for n ≥ 1; F̃₀ is the root column.
  IntMatrix incidence(Level n) const;
  IntVector heights(Level n) const;
  // Heights divided by their gcd.
  IntVector relative_heights(Level n) const;
  RatMatrix stochastic_matrix(Level n) const;
  ScaledMatrix stochastic_scaled(Level n) const;

  // Single square matrix repeated at every level, if so.
  std::optional<IntMatrix> stationary_matrix() const;
  // Largest |V_n| over 1..depth, or nullopt when the rule's shape grows.
  std::optional<std::size_t> bounded_rank(Level depth) const;

  ConnectivityReport connectivity(Level depth) const;
  SimplicityReport simplicity(Level depth) const;
  // Shape chaining and zero rows/columns through `depth`; throws StructureError.
  void validate(Level depth) const;

 private:
  struct Memo;
  void require_level(Level n) const;

  std::string name_;
  IntVector root_edges_;
  std::vector<IntMatrix> prefix_;
  std::optional<DiagramRule> rule_;
  nlohmann::json order_;
  std::shared_ptr<Memo> memo_;
};

// Stochastic matrices of consecutive levels without materializing heights.
class LevelCursor {
 public:
  LevelCursor(const BratteliDiagram& d, Level start);
  Level level() const { return level_; }
  const IntMatrix& incidence() const { return incidence_; }
  // F at the current level.
  ScaledMatrix stochastic() const;
  void stochastic_into(ScaledMatrix& out);
  void advance();

 private:
  void load_incidence();

  const BratteliDiagram* d_;
  Level level_;
  IntVector eta_;
  IntMatrix incidence_;
  IntVector sums_;
  IntMatrix scaled_;
};

// Edge entering `target` at level n from `source` at level n−1; slot < f̃.
struct PathEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t slot = 0;
  friend bool operator==(const PathEdge&, const PathEdge&) = default;
};
// Edges of levels 1..N, so path[k] enters level k+1.
using FinitePath = std::vector<PathEdge>;
// Throws ArgumentError unless consecutive edges compose and slots exist.
void validate_path(const BratteliDiagram& d, const FinitePath& path);

// Levels must start at 0 and increase strictly.
BratteliDiagram telescope(const BratteliDiagram& d, const std::vector<Level>& levels);

// Boolean reachability: true iff every entry of the product is positive.
bool strictly_positive(const IntMatrix& m);

}  // namespace bratteli
