#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "bratteli/diagram.hpp"

namespace bratteli::catalog {

// Single vertex per level; bases (b₀, b₁, …) give root [b₀] and F̃ₙ = [bₙ].
BratteliDiagram odometer(const std::vector<Integer>& bases);
// Constant-shape odometer with base b(n) for every level, root [b(0)].
BratteliDiagram odometer(const Polynomial& base);
// Equal-row-sum rule diagram; throws ParamError when row sums differ.
BratteliDiagram ers(const PolyMatrix& entries, IntVector root_edges = {});
// F̃ₙ = [[aₙ, 1], [1, aₙ]] from level 1.
BratteliDiagram two_vertex(const Polynomial& a);
BratteliDiagram stationary(const IntMatrix& matrix, IntVector root_edges = {});
BratteliDiagram pascal();
// Family with countably many ergodic measures; requires Σ n/(aₙ+n) < ∞.
BratteliDiagram countable_chain(const Polynomial& a);

// Dispatch by family name with JSON parameters (used by the CLI).
BratteliDiagram make(const std::string& family, const nlohmann::json& params);

}  // namespace bratteli::catalog
