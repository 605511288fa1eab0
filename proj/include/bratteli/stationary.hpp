#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "bratteli/diagram.hpp"
#include "bratteli/measure.hpp"
#include "bratteli/verdict.hpp"

namespace bratteli {

// Strongly connected classes of G(F̃), where v → w iff f̃_vw > 0.
struct ClassDecomposition {
  // Sinks first, so the Frobenius permutation is block lower-triangular.
  std::vector<std::vector<std::size_t>> classes;
  std::vector<std::size_t> class_of;
  // reaches[a][b]: a path leads from class a to class b (E_a ⪰ E_b); reflexive.
  std::vector<std::vector<bool>> reaches;
  // Vertices listed class by class.
  std::vector<std::size_t> permutation;

  std::size_t size() const { return classes.size(); }
  // Strict pairs (a, b) with E_a ≻ E_b.
  std::vector<std::pair<std::size_t, std::size_t>> order_pairs() const;
  IntMatrix permuted(const IntMatrix& m) const;
  IntMatrix block(const IntMatrix& m, std::size_t a) const;
  nlohmann::json to_json() const;
};

ClassDecomposition class_decomposition(const IntMatrix& m);

struct SpectralInterval {
  std::size_t class_id = 0;
  Rational lower;
  Rational upper;
  std::size_t iterations = 0;
  bool converged = false;
  // Set when ρ is an integer certified by a positive left eigenvector.
  std::optional<Integer> exact;

  Rational width() const { return upper - lower; }
  bool contains(const Rational& x) const { return lower <= x && x <= upper; }
  nlohmann::json to_json() const;
};

// Collatz–Wielandt bounds on (A + I)ᵏ y; the result is flagged when the width is not reached.
SpectralInterval spectral_radius(const IntMatrix& block, const Rational& width = Rational("1/1000000000000"),
                                 std::size_t max_iterations = 4096);
// Same, but throws ConvergenceError when the interval is flagged.
SpectralInterval certified_spectral_radius(const IntMatrix& block, const Rational& width);

enum class Distinction { Distinguished, NotDistinguished, Unresolved };
const char* to_string(Distinction d);

struct DistinguishedReport {
  std::vector<Distinction> status;
  // One verdict per strict pair (a, b): "ρ_a > ρ_b".
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, Verdict>> comparisons;

  std::vector<std::size_t> distinguished() const;
  bool resolved() const;
  nlohmann::json to_json() const;
};

DistinguishedReport distinguished_classes(const ClassDecomposition& dec, const std::vector<SpectralInterval>& radii);

struct StationaryMeasure {
  std::size_t class_id = 0;
  enum class Kind { Finite, Infinite } kind = Kind::Finite;
  Rational rho;  // meaningful when exact
  double rho_approx = 0;
  bool exact = false;
  // Left eigenvector, exact when ρ is an integer.
  RatVector x;
  std::vector<double> x_approx;
  double residual = 0;
  // Σ x_v h⁽¹⁾_v before scaling (finite kind).
  double normalization = 1;
  // Vertices with x_v > 0.
  std::vector<std::size_t> support;
  // Infinite kind: descendants whose towers carry unbounded mass.
  std::vector<std::size_t> unbounded;

  // μ(X_v⁽ⁿ⁾) = x_v h_v⁽ⁿ⁾ / ρⁿ⁻¹.
  RatVector values(const BratteliDiagram& d, Level n) const;
  std::vector<double> values_approx(const BratteliDiagram& d, Level n) const;
  nlohmann::json to_json(const BratteliDiagram& d, Level depth) const;
};

struct StationaryReport {
  ClassDecomposition classes;
  std::vector<SpectralInterval> radii;
  DistinguishedReport distinction;
  std::vector<StationaryMeasure> measures;

  std::size_t finite_count() const;
  nlohmann::json to_json(const BratteliDiagram& d, Level depth) const;
};

// Finite measures for distinguished classes, infinite records for the rest.
// Throws ArgumentError for non-stationary diagrams, InconclusiveError when a comparison is unresolved.
StationaryReport stationary_measures(const BratteliDiagram& d);

// Finite, exact measure as a tower measure on d.
TowerMeasure to_tower_measure(std::shared_ptr<const BratteliDiagram> d, const StationaryMeasure& m);

}  // namespace bratteli
