#pragma once

#include <json.hpp>

#include <optional>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/measure.hpp"
#include "bratteli/verdict.hpp"

namespace bratteli {

// Vertex kind: W_1..W_k listed, then `tail` on every later level (default: W_k again).
// Edge kind: retained multiplicities Ḡ_1..Ḡ_k with optional retained root edges.
struct SubdiagramSpec {
  enum class Kind { Vertex, Edge };
  Kind kind = Kind::Vertex;
  std::vector<std::vector<std::size_t>> W;
  std::optional<VertexSelector> tail;
  std::vector<IntMatrix> G;
  std::optional<IntVector> root;

  static SubdiagramSpec vertex(std::vector<std::vector<std::size_t>> w, std::optional<VertexSelector> tail = std::nullopt);
  static SubdiagramSpec constant(std::vector<std::size_t> w) { return vertex({std::move(w)}); }
  static SubdiagramSpec full();
  static SubdiagramSpec edges(std::vector<IntMatrix> g, std::optional<IntVector> root = std::nullopt);
  static SubdiagramSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Retained vertices of V_n (sorted ambient indices).
  std::vector<std::size_t> W_at(const BratteliDiagram& d, Level n) const;
  // Selector governing every level past the listed ones, if uniform.
  std::optional<VertexSelector> tail_selector() const;
};

// Throws StructureError when a retained vertex loses all edges.
BratteliDiagram restrict(const BratteliDiagram& d, const SubdiagramSpec& s);

// Ratio trace max_{w∈W_n} h̄_w⁽ⁿ⁾/h_w⁽ⁿ⁾ for n = 1..depth.
std::vector<Rational> thinness_ratios(const BratteliDiagram& d, const SubdiagramSpec& s, Level depth);
Verdict thinness_test(const BratteliDiagram& d, const SubdiagramSpec& s, Level depth);

struct ExtensionReport {
  Level depth = 0;
  // Partial sums of the three equivalent finiteness series.
  std::vector<Rational> series_towers;   // Σ Σ f̃_vw h_w p̄_v
  std::vector<Rational> series_masses;   // Σ μ̂(X_v) Σ f_vw
  std::vector<Rational> series_growth;   // Σ (mass at n+1 − mass at n)
  bool consistent = true;
  // Partial sums of Σ max_v Σ_{w∉W} f_vw.
  std::vector<double> sufficient_trace;
  std::vector<double> thinness_trace;
  Verdict thin;
  Verdict sufficient;
  // Proved with direction "finite" or "infinite" when decided.
  Verdict extension;

  bool finite() const { return extension.proved() && extension.direction == "finite"; }
  bool infinite() const { return extension.proved() && extension.direction == "infinite"; }
  nlohmann::json to_json() const;
};

// q̄ lives on restrict(d, s); throws InvarianceError when it is not invariant there.
ExtensionReport extension_test(const BratteliDiagram& d, const SubdiagramSpec& s, const TowerMeasure& qbar, Level depth);
// Same, using the unique measure of a one-vertex-per-level subdiagram.
ExtensionReport extension_test(const BratteliDiagram& d, const SubdiagramSpec& s, Level depth);

// Probability measure on d anchored at level depth+1 and pushed down by Fᵀ.
// Throws InfiniteExtensionError when the extension is proved infinite.
TowerMeasure extend_measure(std::shared_ptr<const BratteliDiagram> d, const SubdiagramSpec& s, const TowerMeasure& qbar,
                            Level depth);

// q̄⁽ⁿ⁾ ≡ 1 on a subdiagram with one vertex per level.
TowerMeasure odometer_measure(std::shared_ptr<const BratteliDiagram> sub);

}  // namespace bratteli
