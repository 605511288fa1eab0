#pragma once

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/verdict.hpp"

namespace bratteli {

// Tower masses q⁽ⁿ⁾_w = μ(X_w⁽ⁿ⁾) on each level, stored or given in closed form.
class TowerMeasure {
 public:
  using Evaluator = std::function<RatVector(Level)>;

  // q[0] is the level-1 vector.
  static TowerMeasure from_levels(std::shared_ptr<const BratteliDiagram> d, std::vector<RatVector> q,
                                  std::string label = "explicit");
  static TowerMeasure closed_form(std::shared_ptr<const BratteliDiagram> d, Evaluator f, std::string label,
                                  std::optional<Level> max_level = std::nullopt);
  // μ_p on the Pascal diagram: q⁽ⁿ⁾_i = C(n,i) pⁱ (1−p)ⁿ⁻ⁱ.
  static TowerMeasure pascal(std::shared_ptr<const BratteliDiagram> d, const Rational& p);
  // Reads { "q": [[ "p/q", … ], …] } against the given diagram.
  static TowerMeasure from_json(std::shared_ptr<const BratteliDiagram> d, const nlohmann::json& j);

  const BratteliDiagram& diagram() const { return *diagram_; }
  std::shared_ptr<const BratteliDiagram> diagram_ptr() const { return diagram_; }
  const std::string& label() const { return label_; }
  // Deepest level with a value, if bounded.
  std::optional<Level> max_level() const { return max_level_; }
  RatVector at(Level n) const;
  // p⁽ⁿ⁾_w = q⁽ⁿ⁾_w / h⁽ⁿ⁾_w.
  RatVector cylinder_values(Level n) const;
  nlohmann::json to_json(Level depth) const;

 private:
  std::shared_ptr<const BratteliDiagram> diagram_;
  Evaluator eval_;
  std::string label_;
  std::optional<Level> max_level_;
};

struct InvarianceResult {
  bool holds = true;
  std::optional<Level> first_failure;
  std::string reason;
};

// Fₙᵀq⁽ⁿ⁺¹⁾ = q⁽ⁿ⁾ and probability vectors for all n < depth.
InvarianceResult check_invariance(const TowerMeasure& q, Level depth);

// Vertex vectors ḡ(v) of Δ⁽ⁿ⁾ₘ: the rows of G = F_{n+m}⋯F_n.
struct PolytopeSlice {
  Level base = 1;
  Level depth = 0;
  RatMatrix product;

  std::size_t size() const { return product.rows(); }
  RatVector vertex_vector(std::size_t v) const { return product.row(v); }
  std::vector<RatVector> vertex_vectors() const;
};

PolytopeSlice polytope_slice(const BratteliDiagram& d, Level n, Level m);
Rational slice_diameter(const PolytopeSlice& s);
// Diameters at depths 0..max_depth for base n.
std::vector<Rational> diameter_series(const BratteliDiagram& d, Level n, Level max_depth);

// Smallest base level n ≥ 1 with Fₖ nonsingular for k = n..n+m (1 if none).
Level default_base_level(const BratteliDiagram& d, Level m);

struct MeasureCluster {
  std::vector<std::size_t> members;
  std::size_t representative_vertex = 0;
  RatVector representative;
  bool extreme_candidate = true;
  // Base-level vertices carrying at least the clustering radius of mass.
  std::vector<std::size_t> support;
  // Support sets of the cluster-implied measure on levels base..base+depth+1.
  std::vector<std::vector<std::size_t>> level_support;
  // min_w q_w on each of those levels.
  std::vector<double> min_mass;
};

struct MeasureReport {
  Level base = 1;
  Level depth = 0;
  double radius = 1e-3;
  std::vector<MeasureCluster> clusters;
  std::optional<Rational> min_separation;
  // Exact rank of the slice difference vectors (upper-bound proxy for dim Δ⁽ⁿ⁾_∞).
  std::size_t dimension_upper_bound = 0;
  std::size_t cluster_dimension = 0;
  std::vector<double> singular_values;
  Rational diameter;
  Verdict exact_finite_rank;

  std::size_t extreme_count() const;
  nlohmann::json to_json() const;
};

// Clusters the depth-m slice vectors by ε-proximity in L1.
MeasureReport count_measures(const BratteliDiagram& d, Level m, double eps = 1e-3,
                             std::optional<Level> base = std::nullopt);

// μ of the cylinder [path] = q⁽ᴺ⁾_w / h⁽ᴺ⁾_w with w the endpoint.
Rational cylinder_measure(const TowerMeasure& q, const FinitePath& path);

// Coefficients q⁽ⁿ⁺ᵐ⁺¹⁾ of q⁽ⁿ⁾ in the slice vertex vectors, verified exactly.
RatVector decompose(const TowerMeasure& q, Level n, Level m);

}  // namespace bratteli
