#pragma once

#include <json.hpp>

#include <vector>

#include "bratteli/diagram.hpp"

namespace bratteli {

// Linear order on each r⁻¹(v). Edges into v are first enumerated by
// (source ascending, slot ascending); explicit data permutes that list.
struct EdgeOrder {
  enum class Scheme { Consecutive, Reverse, Explicit };
  Scheme scheme = Scheme::Consecutive;
  // data[n-1][v]: positions in the consecutive enumeration, smallest edge first.
  std::vector<std::vector<std::vector<std::size_t>>> data;

  static EdgeOrder consecutive() { return {}; }
  static EdgeOrder reverse() { return {Scheme::Reverse, {}}; }
  static EdgeOrder from_json(const nlohmann::json& j);
  // The diagram's own order section, consecutive when absent.
  static EdgeOrder of(const BratteliDiagram& d);
  nlohmann::json to_json() const;

  // Edges entering v ∈ V_n, smallest first; the root counts as source 0.
  std::vector<PathEdge> incoming(const BratteliDiagram& d, Level n, std::size_t v) const;
};

// Path of length n ending at v using only minimal (maximal) edges.
FinitePath minimal_path(const BratteliDiagram& d, const EdgeOrder& o, Level n, std::size_t v);
FinitePath maximal_path(const BratteliDiagram& d, const EdgeOrder& o, Level n, std::size_t v);

bool is_maximal(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p);
bool is_minimal(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p);

struct ExtremalPaths {
  Level depth = 0;
  Level horizon = 0;
  // Distinct depth-N truncations of extremal paths reaching level `horizon`.
  std::vector<FinitePath> maximal;
  std::vector<FinitePath> minimal;
  // Counts do not exceed max |V_n| when the rank is bounded.
  bool within_rank = true;
};

// horizon = 0 picks min(2·depth, deepest level).
ExtremalPaths extremal_paths(const BratteliDiagram& d, const EdgeOrder& o, Level depth, Level horizon = 0);

// Vershik successor on a finite prefix; throws MaximalPathError on a maximal one.
FinitePath successor(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p);

// Successor on the depth-N truncation: the maximal path into v_i wraps to the
// minimal path into v_{(i+1) mod |V_N|}. Sets *wrapped when a wrap happened.
FinitePath truncated_step(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& p, bool* wrapped = nullptr);

struct OrbitStats {
  std::size_t steps = 0;
  std::size_t wraps = 0;
  std::vector<FinitePath> cylinders;
  std::vector<std::size_t> visits;
  std::vector<Rational> frequencies;
  // Cumulative frequencies after every `window` steps.
  std::vector<std::size_t> window_steps;
  std::vector<std::vector<double>> window_frequencies;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Cylinders are path prefixes from the root; the orbit starts at `start`.
OrbitStats orbit_frequencies(const BratteliDiagram& d, const EdgeOrder& o, const FinitePath& start, std::size_t steps,
                             const std::vector<FinitePath>& cylinders, std::size_t window = 0);

// The root edges, one cylinder each.
std::vector<FinitePath> level_one_cylinders(const BratteliDiagram& d);

struct OrderDiagnostics {
  Level depth = 0;
  std::vector<std::size_t> max_counts;
  std::vector<std::size_t> min_counts;
  // |X_max| ≠ |X_min| at some tested depth.
  bool perfectness_violated = false;
  // One maximal and one minimal prefix at every tested depth.
  bool proper_evidence = false;

  nlohmann::json to_json() const;
};

OrderDiagnostics order_diagnostics(const BratteliDiagram& d, const EdgeOrder& o, Level depth);

nlohmann::json path_json(const FinitePath& p);
FinitePath path_from_json(const nlohmann::json& j);

}  // namespace bratteli
