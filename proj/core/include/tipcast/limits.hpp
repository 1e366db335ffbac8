#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "tipcast/field.hpp"
#include "tipcast/integrator.hpp"

namespace tipcast {

enum class LimitClass { Concave, DConcave };

const char* to_string(LimitClass cls) noexcept;

enum class Stability { Attractive, Repulsive };

const char* to_string(Stability stability) noexcept;

/// Time interval [t_a, t_b] on which hyperbolic solutions are sampled.
/// t_a == t_b asks for the value at a single instant.
struct LimitWindow {
  double t_a = 0.0;
  double t_b = 0.0;
};

struct LimitOptions {
  SolverOptions solver;
  /// Required distance between the two seeds after the pullback.
  double conv_tol = 1e-9;
  /// Minimal distance between consecutive hyperbolic solutions.
  double sep_tol = 1e-4;
  /// Exponents with smaller magnitude are flagged non-hyperbolic.
  double exponent_floor = 1e-3;
  double initial_window = 50.0;
  double max_window = 2e3;
  /// Grid spacing in x and number of sample times of the coercivity scan.
  double bracket_step = 0.25;
  int bracket_times = 16;
  bool check_concavity = true;
  /// Report empty or collapsed limits in the result instead of throwing.
  bool allow_degenerate = false;
};

struct HyperbolicEstimate {
  /// Solution over the evaluation window.
  Trajectory traj;
  /// Finite-horizon Lyapunov exponent over the window plus the converged
  /// second half of the pullback interval.
  double exponent = 0.0;
  Stability stability = Stability::Attractive;
  /// Distance between the two seeds at delivery time.
  double converged = 0.0;
  /// Pullback (or pushback) interval length that achieved convergence.
  double window = 0.0;
  bool hyperbolic = true;

  double value_at(double t) const { return traj.value_at(t); }
};

enum class LimitShape {
  /// Two (concave) or three (d-concave) separated hyperbolic solutions.
  Full,
  /// Concave field without bounded solutions: every solution escapes.
  Empty,
  /// D-concave field whose lower and upper attractors coincide; only one
  /// hyperbolic solution survives.
  Collapsed,
};

const char* to_string(LimitShape shape) noexcept;

/// Which side of the surviving attractor the vanished pair left from.
enum class GhostSide { None, Below, Above };

struct LimitStructure {
  LimitClass cls = LimitClass::Concave;
  LimitShape shape = LimitShape::Full;
  LimitWindow window;
  Bracket bracket;
  /// Ascending order: (r, a) for concave fields, (l, m, u) for d-concave
  /// ones. A collapsed structure holds its single attractor; an empty one
  /// holds nothing.
  std::vector<HyperbolicEstimate> solutions;
  /// Smallest gap between consecutive solutions over the window.
  double min_gap = 0.0;
  GhostSide ghost = GhostSide::None;

  const HyperbolicEstimate& lower() const { return solutions.front(); }
  const HyperbolicEstimate& upper() const { return solutions.back(); }
  /// Middle repeller of a full d-concave structure.
  const HyperbolicEstimate& middle() const { return solutions.at(1); }
};

/// Interval [m1, m2] outside which the field has the coercive sign at all
/// sampled times: concave fields are negative outside, d-concave fields
/// positive below m1 and negative above m2. Uses the field's coercivity hint
/// when it carries one. Returns nothing when a concave field is negative on
/// the whole grid. Throws LimitError(NoBracket) when the sign pattern is not
/// found within the escape bound.
std::optional<Bracket> coercivity_bracket(const ScalarField& field, LimitClass cls,
                                          const LimitWindow& window, const LimitOptions& opts);

/// Attractor by pullback: both seeds are integrated forward from
/// t_a - W to t_a, W doubling until they agree to conv_tol.
HyperbolicEstimate pullback_attractor(const ScalarField& field, const LimitWindow& window,
                                      std::pair<double, double> seeds, const LimitOptions& opts);

/// Repeller by pushback: the time-reversed counterpart, integrating backward
/// from t_b + W to t_b.
HyperbolicEstimate pushback_repeller(const ScalarField& field, const LimitWindow& window,
                                     std::pair<double, double> seeds, const LimitOptions& opts);

/// Pushback with seeds chosen per attempt from the start time t_b + W.
using SeedRule = std::function<std::pair<double, double>(double t_start)>;
HyperbolicEstimate pushback_repeller(const ScalarField& field, const LimitWindow& window,
                                     const SeedRule& seeds, const LimitOptions& opts);

/// All hyperbolic solutions of a limit field over the window, with
/// separation, stability and concavity checks.
LimitStructure limit_structure(const ScalarField& field, LimitClass cls,
                               const LimitWindow& window, const LimitOptions& opts = {});

}  // namespace tipcast
