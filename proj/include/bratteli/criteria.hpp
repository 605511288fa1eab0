#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/verdict.hpp"

namespace bratteli {

// D(x, y) = ln max (x_i y_j)/(x_j y_i).
double projective_metric(const std::vector<double>& x, const std::vector<double>& y);
double projective_metric(const RatVector& x, const RatVector& y);

struct ContractionStats {
  Rational phi;
  double tau = 1;
};

// φ(A) = min a_ij a_rs / (a_rj a_is), 0 with a zero entry; τ = (1−√φ)/(1+√φ).
ContractionStats contraction_stats(const RatMatrix& a);
ContractionStats contraction_stats(const IntMatrix& a);

enum class UeCriterion { RowDiff, MinSum, TauProduct, PhiSum, RatioSum, NormGrowth };
UeCriterion parse_criterion(const std::string& name);
const char* to_string(UeCriterion c);

// Greedy telescoping: starting at `base`, each block n_k..n_k+m_k is the
// shortest whose stochastic product has row diameter < 2^-k.
struct TelescopingSchedule {
  std::vector<Level> starts;
  std::vector<Level> lengths;
  std::vector<Rational> diameters;
  std::size_t achieved = 0;
  bool stagnated = false;
  bool budget_exhausted = false;
  Level levels_used = 0;
};

TelescopingSchedule greedy_telescoping(const BratteliDiagram& d, std::size_t targets, Level base = 1,
                                       Level budget = Level(1) << 23);

struct UeOptions {
  Level base = 1;
  Level budget = Level(1) << 23;
};

Verdict unique_ergodicity(const BratteliDiagram& d, UeCriterion criterion, Level depth, UeOptions options = {});

// "Exactly K ergodic measures" via Σ(1 − |det Fₙ|). With skip_singular, leading
// singular levels are absorbed into the root by telescoping.
Verdict exact_count_determinant(const BratteliDiagram& d, Level depth, bool skip_singular = false);

// Per-level vertex partition: sets are V_{n,1..l}; V_{n,0} is the complement.
// An entry applies from its level until the next entry. Optional parents map
// each block to a block of the previous level (chains).
struct PartitionLevel {
  Level level = 1;
  std::vector<std::vector<std::size_t>> sets;
  std::optional<std::vector<std::size_t>> parents;
};

struct BlockPartition {
  std::vector<PartitionLevel> levels;
  // Every vertex is its own block at every level.
  bool singletons = false;

  static BlockPartition singleton_blocks();
  static BlockPartition constant(std::vector<std::vector<std::size_t>> sets);
  static BlockPartition from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Blocks at level n, validated against |V_n|; throws PartitionError.
  std::vector<std::vector<std::size_t>> blocks_at(const BratteliDiagram& d, Level n) const;
  std::vector<std::size_t> rest_at(const BratteliDiagram& d, Level n) const;
  std::optional<std::vector<std::size_t>> parents_at(Level n) const;
};

struct BlocksReport {
  Level depth = 0;
  std::size_t blocks = 0;
  Verdict a, b;
  std::vector<Verdict> c, d;
  Verdict e1, e2;
  std::optional<double> regularity_c1;
  std::vector<std::vector<std::size_t>> vanishing_candidates;
  std::optional<std::size_t> measure_count;

  nlohmann::json to_json() const;
};

BlocksReport blocks_analysis(const BratteliDiagram& d, const BlockPartition& p, Level depth,
                             std::size_t vanishing_limit = 3);

struct ChainReport {
  Level depth = 0;
  // Block index sequences (i_1..i_N) surviving to depth N; degenerate single paths excluded.
  std::vector<std::vector<std::size_t>> prefixes;
  std::size_t degenerate = 0;
  Verdict c1, d1, e1;
  // "finite:<k>", "countable", "none" or "undetermined".
  std::string measure_claim;

  nlohmann::json to_json() const;
};

ChainReport chain_analysis(const BratteliDiagram& d, const BlockPartition& p, Level depth);

}  // namespace bratteli
