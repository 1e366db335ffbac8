#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tipcast/classifier.hpp"
#include "tipcast/scenarios.hpp"

namespace tipcast {

struct BisectOptions {
  double tol = 1e-7;
  int max_iterations = 200;
  /// Re-classify the final bracket ends with integrator tolerances tightened
  /// by verify_factor.
  bool verify = true;
  double verify_factor = 10.0;
};

/// Bracketed bifurcation point of one parameter.
struct CriticalValue {
  std::string param;
  double lo = 0.0;
  double hi = 0.0;
  Classification case_lo;
  Classification case_hi;
  /// "A<->C", "A<->C1", "A<->C2" (or the reverse order of the labels).
  std::string kind;
  int iterations = 0;
  /// Parameter interval where the classification stayed Indeterminate.
  std::optional<std::pair<double, double>> indeterminate_band;
  /// Outcome of the post-hoc check at tighter tolerances.
  std::optional<bool> verified;
  std::vector<std::string> warnings;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Classifies, turning limit failures near a bifurcation (no convergence,
/// lost separation, non-hyperbolic limits) into Indeterminate results.
Classification classify_robust(const TransitionScenario& s, const ClassifyOptions& opts);

/// Bisection on the predicate "is Case A". The ends must be determinate and
/// differ in that predicate. Indeterminate midpoints are retried with doubled
/// horizon; a persistent Indeterminate band is located and reported, and is
/// an error when wider than tol.
CriticalValue bisect(const Family& family, const std::string& param, double lo, double hi,
                     const ClassifyOptions& opts, const BisectOptions& bopts = {});

struct SweepPoint {
  double value = 0.0;
  std::optional<Classification> result;
  /// Error message when the classification threw.
  std::string error;

  Case kase() const { return result ? result->kase : Case::Indeterminate; }
};

struct SweepResult {
  std::string param;
  std::vector<SweepPoint> points;
  /// Indices i such that points i and i+1 have different determinate cases.
  std::vector<std::size_t> changes;
};

/// Classifies every grid value; runs up to `jobs` classifications at once.
/// Results are ordered as the grid.
SweepResult sweep(const Family& family, const std::string& param, const std::vector<double>& grid,
                  const ClassifyOptions& opts, int jobs = 1);

enum class PairKind { Pair, SingleSided, NoneFound, Unresolved };

const char* to_string(PairKind kind) noexcept;

struct PairOptions {
  /// Scan resolution: the range is split into this many steps.
  int steps = 64;
  int jobs = 1;
  BisectOptions bisect;
};

struct PairResult {
  PairKind kind = PairKind::NoneFound;
  /// Edges of the Case A interval: lower then upper.
  std::vector<CriticalValue> edges;
  SweepResult scan;
  /// For NoneFound: the common case of the scan, if uniform.
  std::optional<Case> uniform;
  /// For Unresolved: a C2|C1 bracket of width <= tol in which no Case A
  /// value was found.
  std::optional<std::pair<double, double>> unresolved;
};

/// Scans [lo, hi] for a Case A interval of a d-concave family and bisects its
/// edges.
PairResult find_tipping_pair(const Family& family, const std::string& param, double lo, double hi,
                             const ClassifyOptions& opts, const PairOptions& popts = {});

}  // namespace tipcast
