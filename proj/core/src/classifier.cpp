#include "tipcast/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tipcast/error.hpp"

namespace tipcast {

const char* to_string(Case c) noexcept {
  switch (c) {
    case Case::A: return "A";
    case Case::B: return "B";
    case Case::C: return "C";
    case Case::B1: return "B1";
    case Case::B2: return "B2";
    case Case::C1: return "C1";
    case Case::C2: return "C2";
    case Case::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

std::optional<Case> case_from_string(std::string_view text) {
  for (Case c : {Case::A, Case::B, Case::C, Case::B1, Case::B2, Case::C1, Case::C2,
                 Case::Indeterminate}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

ClassifyOptions default_options(const TransitionScenario& s) {
  ClassifyOptions o;
  if (s.tuning.match_tol) o.match_tol = *s.tuning.match_tol;
  if (s.tuning.approach_tol) o.approach_tol = *s.tuning.approach_tol;
  if (s.tuning.horizon) {
    o.horizon = *s.tuning.horizon;
    o.max_horizon = std::max(o.max_horizon, 4 * o.horizon);
  }
  if (s.tuning.escape_bound) o.limits.solver.escape_bound = *s.tuning.escape_bound;
  return o;
}

namespace {

std::string cache_key(const ScalarField& f, LimitClass cls, const LimitWindow& w,
                      const LimitOptions& o) {
  std::ostringstream os;
  os.precision(17);
  os << f.canonical() << '|' << to_string(cls) << '|' << w.t_a << ',' << w.t_b << '|'
     << o.solver.abs_tol << ',' << o.solver.rel_tol << ',' << o.solver.escape_bound << ','
     << o.solver.max_step << ',' << o.solver.min_step << ',' << o.solver.sample_stride << '|'
     << o.conv_tol << ',' << o.sep_tol << ',' << o.exponent_floor << ',' << o.initial_window
     << ',' << o.max_window << ',' << o.bracket_step << ',' << o.bracket_times << ','
     << o.check_concavity << o.allow_degenerate;
  if (f.coercivity_hint()) os << '|' << f.coercivity_hint()->lo << ',' << f.coercivity_hint()->hi;
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::shared_ptr<const LimitStructure> limits_of(const ScalarField& f, const char* which,
                                                LimitClass cls, const LimitWindow& w,
                                                const ClassifyOptions& o) {
  LimitOptions lo = o.limits;
  lo.allow_degenerate = true;
  try {
    if (o.cache) return o.cache->get(f, cls, w, lo);
    return std::make_shared<const LimitStructure>(limit_structure(f, cls, w, lo));
  } catch (const LimitError& e) {
    throw LimitError(e.kind(), std::string(which) + ": " + e.reason(), e.detail());
  }
}

// Forward integration of a tracked solution; keeps only the tail unless the
// full trajectory is requested.
Trajectory track_forward(const ScalarField& g, double t0, double x0, double t1, double tail_from,
                         const ClassifyOptions& o) {
  SolverOptions so = o.limits.solver;
  if (!o.keep_full_trajectories) so.record_from = tail_from;
  return integrate(g, t0, x0, t1, so);
}

// Backward witness from (H, x_H) to -H. Returns the stored part and whether
// the whole leg completed.
std::pair<Trajectory, bool> track_backward(const ScalarField& g, double H, double x_H,
                                           double tail_from, const ClassifyOptions& o) {
  if (o.keep_full_trajectories) {
    Trajectory tr = integrate(g, H, x_H, -H, o.limits.solver);
    const bool ok = tr.completed();
    return {std::move(tr), ok};
  }
  Trajectory tail = integrate(g, H, x_H, tail_from, o.limits.solver);
  if (!tail.completed()) return {std::move(tail), false};
  SolverOptions so = o.limits.solver;
  so.record_from = -H;
  const Trajectory rest = integrate(g, tail_from, tail.back().x, -H, so);
  return {std::move(tail), rest.completed()};
}

double tail_distance(const Trajectory& tr, const HyperbolicEstimate& target, double tail_from) {
  double d = 0.0;
  for (const Sample& s : tr.samples()) {
    if (s.t < tail_from) continue;
    if (!target.traj.covers(s.t)) continue;
    d = std::max(d, std::abs(s.x - target.value_at(s.t)));
  }
  return d;
}

// Index of the unique target within match_tol while every other target is
// at least ten times further away; -1 otherwise.
int unique_match(const std::vector<double>& dist, double match_tol) {
  int hit = -1;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= match_tol) {
      if (hit >= 0) return -1;
      hit = static_cast<int>(i);
    } else if (dist[i] < 10 * match_tol) {
      return -1;
    }
  }
  return hit;
}

void check_approach(const TransitionScenario& s, const LimitStructure& past,
                    const LimitStructure& future, double H, const ClassifyOptions& o) {
  if (past.shape != LimitShape::Empty) {
    const double gap = approach_gap(s.g, s.g_minus, -H, past.bracket);
    if (gap > o.approach_tol) {
      throw ClassifyError("g does not approach g_minus: gap " + fmt(gap) + " at t = " + fmt(-H) +
                          " exceeds approach_tol " + fmt(o.approach_tol));
    }
  }
  if (future.shape != LimitShape::Empty) {
    const double gap = approach_gap(s.g, s.g_plus, H, future.bracket);
    if (gap > o.approach_tol) {
      throw ClassifyError("g does not approach g_plus: gap " + fmt(gap) + " at t = " + fmt(H) +
                          " exceeds approach_tol " + fmt(o.approach_tol));
    }
  }
}

struct Attempt {
  Classification result;
  bool retry = false;
};

Attempt concave_attempt(const TransitionScenario& s, double H, const ClassifyOptions& o) {
  Attempt at;
  Classification& out = at.result;
  out.horizon = H;
  const double tail_from = (1 - o.tail_fraction) * H;
  const auto past = limits_of(s.g_minus, "past limit g_minus", LimitClass::Concave, {-H, -H}, o);
  const auto future = limits_of(s.g_plus, "future limit g_plus", LimitClass::Concave, {tail_from, H}, o);
  check_approach(s, *past, *future, H, o);
  if (past->shape == LimitShape::Empty || future->shape == LimitShape::Empty) {
    out.kase = Case::C;
    out.tag = past->shape == LimitShape::Empty ? "past limit has no bounded solutions"
                                               : "future limit has no bounded solutions";
    return at;
  }

  const double a0 = past->upper().value_at(-H);
  Trajectory a_g = track_forward(s.g, -H, a0, H, tail_from, o);
  switch (a_g.status()) {
    case Status::EscapedDown:
      out.kase = Case::C;
      out.escape_time = a_g.t_stop();
      if (o.full_witnesses) {
        auto r_g = track_backward(s.g, H, future->lower().value_at(H), tail_from, o).first;
        out.solutions.emplace("r_g", std::move(r_g));
      }
      out.solutions.emplace("a_g", std::move(a_g));
      return at;
    case Status::EscapedUp:
      throw ClassifyError("a_g escaped upward at t = " + fmt(a_g.t_stop()) +
                          "; the field is not coercive");
    case Status::StepUnderflow:
      out.tag = "step underflow at t = " + fmt(a_g.t_stop());
      return at;
    case Status::Completed: break;
  }

  const HyperbolicEstimate& r_plus = future->lower();
  const HyperbolicEstimate& a_plus = future->upper();
  const std::vector<double> dist = {tail_distance(a_g, r_plus, tail_from),
                                    tail_distance(a_g, a_plus, tail_from)};
  out.witnesses = {{"a_g", "r+", dist[0]}, {"a_g", "a+", dist[1]}};
  const int hit = unique_match(dist, o.match_tol);
  if (hit == 1) {
    out.kase = Case::A;
    if (o.full_witnesses) {
      auto [r_g, bounded] = track_backward(s.g, H, r_plus.value_at(H), tail_from, o);
      if (bounded) {
        double inf = std::numeric_limits<double>::infinity();
        for (const Sample& smp : a_g.samples()) {
          if (smp.t >= tail_from && r_g.covers(smp.t)) inf = std::min(inf, smp.x - r_g.value_at(smp.t));
        }
        out.min_separation = inf;
      }
      out.solutions.emplace("r_g", std::move(r_g));
    }
  } else if (hit == 0) {
    out.tag = "B-candidate";
  } else {
    out.tag = "no clean match";
    at.retry = true;
  }
  out.solutions.emplace("a_g", std::move(a_g));
  return at;
}

Attempt dconcave_attempt(const TransitionScenario& s, double H, const ClassifyOptions& o) {
  Attempt at;
  Classification& out = at.result;
  out.horizon = H;
  const double tail_from = (1 - o.tail_fraction) * H;
  const auto past = limits_of(s.g_minus, "past limit g_minus", LimitClass::DConcave, {-H, -H}, o);
  const auto future = limits_of(s.g_plus, "future limit g_plus", LimitClass::DConcave, {tail_from, H}, o);
  check_approach(s, *past, *future, H, o);

  const bool past_single = past->shape == LimitShape::Collapsed;
  const double l0 = past->lower().value_at(-H);
  const double u0 = past->upper().value_at(-H);
  Trajectory u_g = track_forward(s.g, -H, u0, H, tail_from, o);
  Trajectory l_g = past_single ? u_g : track_forward(s.g, -H, l0, H, tail_from, o);
  for (const Trajectory* tr : {&l_g, &u_g}) {
    if (tr->escaped()) {
      throw ClassifyError("forward solution escaped at t = " + fmt(tr->t_stop()) +
                          "; the field is not coercive in the d-concave sense");
    }
    if (tr->status() == Status::StepUnderflow) {
      out.tag = "step underflow at t = " + fmt(tr->t_stop());
      return at;
    }
  }

  if (future->shape == LimitShape::Collapsed) {
    const HyperbolicEstimate& only = future->upper();
    const double du = tail_distance(u_g, only, tail_from);
    const double dl = tail_distance(l_g, only, tail_from);
    const char* name = future->ghost == GhostSide::Below ? "u+" : "l+";
    out.witnesses = {{"l_g", name, dl}, {"u_g", name, du}};
    out.tag = "future limit collapsed";
    if (du <= o.match_tol && dl <= o.match_tol && future->ghost != GhostSide::None) {
      out.kase = future->ghost == GhostSide::Above ? Case::C2 : Case::C1;
    } else {
      out.tag = "future limit collapsed; no clean match";
      at.retry = true;
    }
  } else {
    const std::vector<std::string> names = {"l+", "m+", "u+"};
    std::vector<double> dl(3), du(3);
    for (std::size_t i = 0; i < 3; ++i) {
      dl[i] = tail_distance(l_g, future->solutions[i], tail_from);
      du[i] = tail_distance(u_g, future->solutions[i], tail_from);
      out.witnesses.push_back({"l_g", names[i], dl[i]});
    }
    for (std::size_t i = 0; i < 3; ++i) out.witnesses.push_back({"u_g", names[i], du[i]});
    const int ml = unique_match(dl, o.match_tol);
    const int mu = unique_match(du, o.match_tol);
    if (!past_single && mu == 2 && ml == 0) {
      out.kase = Case::A;
    } else if (mu == 0) {
      out.kase = Case::C2;
    } else if (ml == 2) {
      out.kase = Case::C1;
    } else if (mu == 1) {
      out.tag = "B2-candidate";
    } else if (ml == 1) {
      out.tag = "B1-candidate";
    } else {
      out.tag = "no clean match";
      at.retry = true;
    }
    if (past_single && out.determinate()) out.tag = "past limit collapsed";
    if (o.full_witnesses && out.determinate()) {
      auto [m_g, bounded] = track_backward(s.g, H, future->middle().value_at(H), tail_from, o);
      out.m_g_bounded = bounded;
      out.solutions.emplace("m_g", std::move(m_g));
    }
  }
  out.solutions.emplace("l_g", std::move(l_g));
  out.solutions.emplace("u_g", std::move(u_g));
  return at;
}

template <typename F>
Classification with_retry(const TransitionScenario& s, const ClassifyOptions& o, F attempt) {
  if (!(o.horizon > 0)) throw ClassifyError("horizon must be positive");
  Attempt at = attempt(s, o.horizon, o);
  const double H2 = std::min(2 * o.horizon, o.max_horizon);
  if (at.retry && H2 > o.horizon) at = attempt(s, H2, o);
  return std::move(at.result);
}

}  // namespace

std::shared_ptr<const LimitStructure> LimitCache::get(const ScalarField& field, LimitClass cls,
                                                      const LimitWindow& window,
                                                      const LimitOptions& opts) {
  const std::string key = cache_key(field, cls, window, opts);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto value = std::make_shared<const LimitStructure>(limit_structure(field, cls, window, opts));
  std::lock_guard lock(mutex_);
  if (entries_.size() >= capacity_) entries_.clear();
  entries_.emplace(key, value);
  return value;
}

std::size_t LimitCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void LimitCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

double approach_gap(const ScalarField& g, const ScalarField& g_lim, double t,
                    const Bracket& bracket) {
  const int n = 100;
  const double lo = bracket.lo - 1.0;
  const double hi = bracket.hi + 1.0;
  double gap = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    gap = std::max(gap, std::abs(g.eval(t, x) - g_lim.eval(t, x)));
  }
  return gap;
}

Classification classify_concave(const TransitionScenario& s, const ClassifyOptions& opts) {
  return with_retry(s, opts, concave_attempt);
}

Classification classify_dconcave(const TransitionScenario& s, const ClassifyOptions& opts) {
  return with_retry(s, opts, dconcave_attempt);
}

Classification classify(const TransitionScenario& s, const ClassifyOptions& opts) {
  return s.cls == LimitClass::Concave ? classify_concave(s, opts) : classify_dconcave(s, opts);
}

}  // namespace tipcast
