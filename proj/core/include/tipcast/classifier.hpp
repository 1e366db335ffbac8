#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tipcast/field.hpp"
#include "tipcast/integrator.hpp"
#include "tipcast/limits.hpp"

namespace tipcast {

enum class Case { A, B, C, B1, B2, C1, C2, Indeterminate };

const char* to_string(Case c) noexcept;
std::optional<Case> case_from_string(std::string_view text);

/// Classification settings a scenario recommends; unset entries fall back
/// to the library defaults.
struct ScenarioTuning {
  std::optional<double> match_tol;
  std::optional<double> approach_tol;
  std::optional<double> horizon;
  std::optional<double> escape_bound;
};

/// Transition equation x' = g(t, x) together with its past and future limit
/// equations.
struct TransitionScenario {
  std::string name;
  LimitClass cls = LimitClass::Concave;
  ScalarField g;
  ScalarField g_minus;
  ScalarField g_plus;
  ParameterMap params;
  ScenarioTuning tuning;
};

class LimitCache;

struct ClassifyOptions {
  LimitOptions limits;
  double horizon = 1e4;
  /// The horizon is doubled once, up to this value, when the tail matches
  /// no future solution.
  double max_horizon = 4e4;
  double match_tol = 1e-3;
  double approach_tol = 1e-6;
  /// Tail window is [(1 - tail_fraction) H, H].
  double tail_fraction = 0.1;
  /// Compute r_g (concave) or m_g (d-concave) by backward integration as
  /// additional witnesses. Not needed for the decision.
  bool full_witnesses = true;
  /// Keep the full trajectories of the tracked solutions instead of the
  /// tail only.
  bool keep_full_trajectories = false;
  /// Shared store of limit structures; may be null.
  std::shared_ptr<LimitCache> cache;
};

/// Library defaults overridden by the scenario's tuning.
ClassifyOptions default_options(const TransitionScenario& s);

/// Distance over the tail window between a tracked solution and a future
/// hyperbolic solution.
struct Witness {
  std::string solution;
  std::string target;
  double distance = 0.0;
};

struct Classification {
  Case kase = Case::Indeterminate;
  /// Candidate or failure description for Indeterminate results, limit
  /// shapes for degenerate ones; empty otherwise.
  std::string tag;
  std::vector<Witness> witnesses;
  /// a_g, r_g (concave) or l_g, m_g, u_g (d-concave), as far as computed.
  std::map<std::string, Trajectory> solutions;
  double horizon = 0.0;
  /// Escape time of a_g (concave Case C).
  std::optional<double> escape_time;
  /// inf over the tail of a_g - r_g (concave Case A).
  std::optional<double> min_separation;
  /// Whether m_g stayed bounded when integrated backward (d-concave).
  std::optional<bool> m_g_bounded;

  bool determinate() const { return kase != Case::Indeterminate; }
};

/// Thread-safe store of limit structures keyed by field, class, window and
/// the options that influence the result.
class LimitCache {
 public:
  explicit LimitCache(std::size_t capacity = 64) : capacity_(capacity) {}

  std::shared_ptr<const LimitStructure> get(const ScalarField& field, LimitClass cls,
                                            const LimitWindow& window, const LimitOptions& opts);
  std::size_t size() const;
  void clear();

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const LimitStructure>> entries_;
};

/// Largest |g(t, x) - g_lim(t, x)| over an x grid of the bracket at time t.
double approach_gap(const ScalarField& g, const ScalarField& g_lim, double t,
                    const Bracket& bracket);

Classification classify_concave(const TransitionScenario& s, const ClassifyOptions& opts);
Classification classify_dconcave(const TransitionScenario& s, const ClassifyOptions& opts);
/// Dispatches on the scenario class.
Classification classify(const TransitionScenario& s, const ClassifyOptions& opts);

}  // namespace tipcast
