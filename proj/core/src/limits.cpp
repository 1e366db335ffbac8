#include "tipcast/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tipcast/error.hpp"

namespace tipcast {

const char* to_string(LimitClass cls) noexcept {
  return cls == LimitClass::Concave ? "concave" : "dconcave";
}

const char* to_string(Stability stability) noexcept {
  return stability == Stability::Attractive ? "attractive" : "repulsive";
}

const char* to_string(LimitShape shape) noexcept {
  switch (shape) {
    case LimitShape::Full: return "full";
    case LimitShape::Empty: return "empty";
    case LimitShape::Collapsed: return "collapsed";
  }
  return "full";
}

namespace {

constexpr double kSeedOffset = 1.0;
constexpr int kMaxGridPoints = 200000;
constexpr int kConcavityGrid = 200;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::vector<double> sample_times(const LimitWindow& w, const LimitOptions& opts) {
  const int n = std::max(2, opts.bracket_times);
  const double lo = w.t_a - opts.initial_window;
  const double hi = w.t_b;
  std::vector<double> ts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ts[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return ts;
}

struct Leg {
  Trajectory traj;
  double x_end;
};

// Runs one seed to `t_end`, keeping only samples from `keep_from` on.
Leg run_seed(const ScalarField& g, double t0, double x0, double t_end, double keep_from,
             const SolverOptions& base) {
  SolverOptions so = base;
  so.record_from = keep_from;
  Trajectory tr = integrate(g, t0, x0, t_end, so);
  if (!tr.completed()) {
    const char* what = tr.escaped() ? "seed escaped" : "step underflow while converging seed";
    throw LimitError(LimitErrorKind::SeedEscaped,
                     std::string(what) + " (x0=" + fmt(x0) + ", t=" + fmt(tr.t_stop()) + ")",
                     tr.t_stop());
  }
  const double x_end = tr.back().x;
  return {std::move(tr), x_end};
}

// Integral of g_x along a completed trajectory and its signed span.
std::pair<double, double> exponent_integral(const ScalarField& g, const Trajectory& tr) {
  const auto& s = tr.samples();
  if (s.size() < 2 || s.back().t == s.front().t) return {0.0, 0.0};
  const double span = s.back().t - s.front().t;
  return {lyapunov_along(g, tr) * span, span};
}

HyperbolicEstimate converge(const ScalarField& g, const LimitWindow& window, bool forward,
                            const SeedRule& seeds, const LimitOptions& opts) {
  if (window.t_b < window.t_a) throw Error("limit window has t_b < t_a");
  double W = opts.initial_window;
  for (;;) {
    const double t_start = forward ? window.t_a - W : window.t_b + W;
    const double t_meet = forward ? window.t_a : window.t_b;
    const double t_half = forward ? window.t_a - W / 2 : window.t_b + W / 2;
    const auto [s1, s2] = seeds(t_start);
    Leg a = run_seed(g, t_start, s1, t_meet, t_half, opts.solver);
    Leg b = run_seed(g, t_start, s2, t_meet, t_meet, opts.solver);
    const double gap = std::abs(a.x_end - b.x_end);
    if (gap <= opts.conv_tol) {
      const double x_mid = 0.5 * (a.x_end + b.x_end);
      const double t_other = forward ? window.t_b : window.t_a;
      const Direction dir = forward ? Direction::Forward : Direction::Backward;
      HyperbolicEstimate est;
      if (t_other != t_meet) {
        est.traj = integrate(g, t_meet, x_mid, t_other, opts.solver);
        if (!est.traj.completed()) {
          throw LimitError(LimitErrorKind::SeedEscaped, "converged solution left the bounded region",
                           est.traj.t_stop());
        }
      } else {
        est.traj = Trajectory({{t_meet, x_mid, g.eval(t_meet, x_mid)}}, dir, Status::Completed,
                              t_meet);
      }
      const Trajectory settled =
          forward ? a.traj.slice(t_half, t_meet) : a.traj.slice(t_meet, t_half);
      const auto [i1, s1span] = exponent_integral(g, settled);
      const auto [i2, s2span] = exponent_integral(g, est.traj);
      est.exponent = (i1 + i2) / (s1span + s2span);
      est.stability = forward ? Stability::Attractive : Stability::Repulsive;
      est.converged = gap;
      est.window = W;
      est.hyperbolic = std::abs(est.exponent) > opts.exponent_floor;
      return est;
    }
    if (W >= opts.max_window) {
      throw LimitError(LimitErrorKind::NoConvergence,
                       "seeds still " + fmt(gap) + " apart after window " + fmt(W), gap);
    }
    W = std::min(2 * W, opts.max_window);
  }
}

// Smallest gap upper - lower over the samples of `upper`.
double min_gap(const HyperbolicEstimate& lower, const HyperbolicEstimate& upper) {
  double m = std::numeric_limits<double>::infinity();
  for (const Sample& s : upper.traj.samples()) {
    m = std::min(m, s.x - lower.traj.value_at(s.t));
  }
  return m;
}

double max_abs_gap(const HyperbolicEstimate& lower, const HyperbolicEstimate& upper) {
  double m = 0.0;
  for (const Sample& s : upper.traj.samples()) {
    m = std::max(m, std::abs(s.x - lower.traj.value_at(s.t)));
  }
  return m;
}

void check_concavity(const ScalarField& g, LimitClass cls, const LimitWindow& window,
                     const Bracket& br, const LimitOptions& opts) {
  const double lo = br.lo - kSeedOffset;
  const double hi = br.hi + kSeedOffset;
  const double h = (hi - lo) / kConcavityGrid;
  for (double t : sample_times(window, opts)) {
    std::vector<double> gxx(kConcavityGrid + 1);
    double scale = 1.0;
    for (int i = 0; i <= kConcavityGrid; ++i) {
      gxx[static_cast<std::size_t>(i)] = g.eval_dxx(t, lo + h * i);
      scale = std::max(scale, std::abs(gxx[static_cast<std::size_t>(i)]));
    }
    const double tol = 1e-9 * scale;
    for (int i = 0; i <= kConcavityGrid; ++i) {
      const double x = lo + h * i;
      const double v = gxx[static_cast<std::size_t>(i)];
      if (cls == LimitClass::Concave && v > tol) {
        throw LimitError(LimitErrorKind::ConcavityViolation,
                         "g_xx = " + fmt(v) + " > 0 at (t=" + fmt(t) + ", x=" + fmt(x) + ")", v);
      }
      if (cls == LimitClass::DConcave && i > 0) {
        const double rise = v - gxx[static_cast<std::size_t>(i - 1)];
        if (rise > tol) {
          throw LimitError(LimitErrorKind::ConcavityViolation,
                           "g_xx increases near (t=" + fmt(t) + ", x=" + fmt(x) + ")", rise);
        }
      }
    }
  }
}

// Side of the surviving attractor where the time-averaged field has its
// weakest local extremum, i.e. where the lost pair of solutions was.
GhostSide ghost_side(const ScalarField& g, const LimitWindow& window, const Bracket& br,
                     double attractor, const LimitOptions& opts) {
  const auto ts = sample_times(window, opts);
  const double lo = br.lo - kSeedOffset;
  const double hi = br.hi + kSeedOffset;
  const int n = 2000;
  const double h = (hi - lo) / n;
  std::vector<double> avg(static_cast<std::size_t>(n + 1), 0.0);
  for (int i = 0; i <= n; ++i) {
    double acc = 0.0;
    for (double t : ts) acc += g.eval(t, lo + h * i);
    avg[static_cast<std::size_t>(i)] = acc / static_cast<double>(ts.size());
  }
  double best = std::numeric_limits<double>::infinity();
  GhostSide side = GhostSide::None;
  for (int i = 1; i < n; ++i) {
    const double d1 = avg[static_cast<std::size_t>(i)] - avg[static_cast<std::size_t>(i - 1)];
    const double d2 = avg[static_cast<std::size_t>(i + 1)] - avg[static_cast<std::size_t>(i)];
    if ((d1 > 0) == (d2 > 0)) continue;
    const double v = std::abs(avg[static_cast<std::size_t>(i)]);
    if (v < best) {
      best = v;
      side = lo + h * i > attractor ? GhostSide::Above : GhostSide::Below;
    }
  }
  return side;
}

void require_stability(const HyperbolicEstimate& e, const char* name) {
  if (!e.hyperbolic) {
    throw LimitError(LimitErrorKind::NonHyperbolic,
                     std::string(name) + " has exponent " + fmt(e.exponent), e.exponent);
  }
  const bool ok = e.stability == Stability::Attractive ? e.exponent < 0 : e.exponent > 0;
  if (!ok) {
    throw LimitError(LimitErrorKind::WrongStabilitySign,
                     std::string(name) + " has exponent " + fmt(e.exponent), e.exponent);
  }
}

struct ScanPoint {
  double x;
  double v;
};

// Field values on the grid at time t, plus the refined local extrema: a
// near-tangency between grid points would otherwise hide a sign change.
void scan_profile(const ScalarField& g, double t, double x0, double step, int n,
                  std::vector<ScanPoint>& pts) {
  pts.clear();
  pts.reserve(static_cast<std::size_t>(n) + 8);
  for (int i = 0; i <= n; ++i) {
    const double x = x0 + step * i;
    pts.push_back({x, g.eval(t, x)});
  }
  const std::size_t grid = pts.size();
  for (std::size_t i = 1; i + 1 < grid; ++i) {
    const bool peak = pts[i].v >= pts[i - 1].v && pts[i].v >= pts[i + 1].v;
    const bool dip = pts[i].v <= pts[i - 1].v && pts[i].v <= pts[i + 1].v;
    if (!peak && !dip) continue;
    double a = pts[i - 1].x, b = pts[i + 1].x;
    double da = g.eval_dx(t, a);
    if ((da > 0) == (g.eval_dx(t, b) > 0)) continue;
    for (int k = 0; k < 60 && b - a > 1e-13 * (1 + std::abs(a)); ++k) {
      const double m = 0.5 * (a + b);
      const double dm = g.eval_dx(t, m);
      if ((dm > 0) == (da > 0)) {
        a = m;
        da = dm;
      } else {
        b = m;
      }
    }
    const double xe = 0.5 * (a + b);
    pts.push_back({xe, g.eval(t, xe)});
  }
}

void require_gap(double gap, const char* what, const LimitOptions& opts) {
  if (!(gap >= opts.sep_tol)) {
    throw LimitError(LimitErrorKind::SeparationFailure,
                     std::string(what) + " only " + fmt(gap) + " apart", gap);
  }
}

}  // namespace

std::optional<Bracket> coercivity_bracket(const ScalarField& g, LimitClass cls,
                                          const LimitWindow& window, const LimitOptions& opts) {
  if (g.coercivity_hint()) return g.coercivity_hint();
  const double E = opts.solver.escape_bound;
  double step = opts.bracket_step;
  if (2 * E / step > kMaxGridPoints) step = 2 * E / kMaxGridPoints;
  const int n = static_cast<int>(std::floor(2 * E / step));
  const double x0 = -0.5 * n * step;

  double m1 = std::numeric_limits<double>::infinity();
  double m2 = -std::numeric_limits<double>::infinity();
  std::vector<ScanPoint> pts;
  for (double t : sample_times(window, opts)) {
    scan_profile(g, t, x0, step, n, pts);
    const double g_lo = pts[0].v;
    const double g_hi = pts[static_cast<std::size_t>(n)].v;
    if (cls == LimitClass::Concave) {
      if (g_lo >= 0 || g_hi >= 0) {
        throw LimitError(LimitErrorKind::NoBracket,
                         "field is not negative at |x| = " + fmt(-x0) + " (t=" + fmt(t) + ")");
      }
      for (const ScanPoint& p : pts) {
        if (p.v >= 0) {
          m1 = std::min(m1, p.x - step);
          m2 = std::max(m2, p.x + step);
        }
      }
    } else {
      if (g_lo <= 0 || g_hi >= 0) {
        throw LimitError(LimitErrorKind::NoBracket,
                         "field lacks the d-concave sign pattern at |x| = " + fmt(-x0) +
                             " (t=" + fmt(t) + ")");
      }
      double first_nonpos = -x0, last_nonneg = x0;
      for (const ScanPoint& p : pts) {
        if (p.v <= 0) first_nonpos = std::min(first_nonpos, p.x);
        if (p.v >= 0) last_nonneg = std::max(last_nonneg, p.x);
      }
      m1 = std::min(m1, first_nonpos - step);
      m2 = std::max(m2, last_nonneg + step);
    }
  }
  if (cls == LimitClass::Concave && m1 > m2) return std::nullopt;
  return Bracket{m1, m2};
}

HyperbolicEstimate pullback_attractor(const ScalarField& g, const LimitWindow& window,
                                      std::pair<double, double> seeds, const LimitOptions& opts) {
  return converge(
      g, window, true, [seeds](double) { return seeds; }, opts);
}

HyperbolicEstimate pushback_repeller(const ScalarField& g, const LimitWindow& window,
                                     std::pair<double, double> seeds, const LimitOptions& opts) {
  return converge(
      g, window, false, [seeds](double) { return seeds; }, opts);
}

HyperbolicEstimate pushback_repeller(const ScalarField& g, const LimitWindow& window,
                                     const SeedRule& seeds, const LimitOptions& opts) {
  return converge(g, window, false, seeds, opts);
}

LimitStructure limit_structure(const ScalarField& g, LimitClass cls, const LimitWindow& window,
                               const LimitOptions& opts) {
  LimitStructure out;
  out.cls = cls;
  out.window = window;
  std::optional<Bracket> bracket;
  try {
    bracket = coercivity_bracket(g, cls, window, opts);
  } catch (const LimitError&) {
    // A wrong class tag usually shows up as a missing sign pattern; report
    // the concavity failure instead when there is one near the origin.
    if (opts.check_concavity) check_concavity(g, cls, window, Bracket{-10.0, 10.0}, opts);
    throw;
  }
  if (!bracket) {
    if (!opts.allow_degenerate) {
      throw LimitError(LimitErrorKind::NoBracket, "field is negative everywhere on the scan grid");
    }
    out.shape = LimitShape::Empty;
    return out;
  }
  out.bracket = *bracket;
  if (opts.check_concavity) check_concavity(g, cls, window, *bracket, opts);

  const double m1 = bracket->lo;
  const double m2 = bracket->hi;
  const std::pair<double, double> above{m2 + kSeedOffset, m2 + 2 * kSeedOffset};
  const std::pair<double, double> below{m1 - kSeedOffset, m1 - 2 * kSeedOffset};

  if (cls == LimitClass::Concave) {
    HyperbolicEstimate a;
    try {
      a = pullback_attractor(g, window, above, opts);
    } catch (const LimitError& e) {
      if (opts.allow_degenerate && e.kind() == LimitErrorKind::SeedEscaped) {
        out.shape = LimitShape::Empty;
        return out;
      }
      throw;
    }
    HyperbolicEstimate r = pushback_repeller(g, window, below, opts);
    out.min_gap = min_gap(r, a);
    require_gap(out.min_gap, "attractor and repeller", opts);
    require_stability(a, "attractor");
    require_stability(r, "repeller");
    out.solutions = {std::move(r), std::move(a)};
    return out;
  }

  HyperbolicEstimate l = pullback_attractor(g, window, below, opts);
  HyperbolicEstimate u = pullback_attractor(g, window, above, opts);
  if (opts.allow_degenerate && max_abs_gap(l, u) < opts.sep_tol) {
    require_stability(u, "attractor");
    out.shape = LimitShape::Collapsed;
    out.ghost = ghost_side(g, window, *bracket, u.traj.back().x, opts);
    out.solutions = {std::move(u)};
    return out;
  }
  require_gap(min_gap(l, u), "lower and upper attractors", opts);

  // Seeds for the middle repeller sit between the attractors continued to
  // the pushback start.
  const double t_b = window.t_b;
  const double l_b = l.traj.value_at(t_b);
  const double u_b = u.traj.value_at(t_b);
  const SeedRule middle_seeds = [&](double t_start) {
    const double lo = t_start > t_b ? run_seed(g, t_b, l_b, t_start, t_start, opts.solver).x_end
                                    : l_b;
    const double hi = t_start > t_b ? run_seed(g, t_b, u_b, t_start, t_start, opts.solver).x_end
                                    : u_b;
    return std::pair<double, double>{lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)};
  };
  HyperbolicEstimate m = pushback_repeller(g, window, middle_seeds, opts);

  out.min_gap = std::min(min_gap(l, m), min_gap(m, u));
  require_gap(out.min_gap, "hyperbolic solutions", opts);
  require_stability(l, "lower attractor");
  require_stability(m, "middle repeller");
  require_stability(u, "upper attractor");
  out.solutions = {std::move(l), std::move(m), std::move(u)};
  return out;
}

}  // namespace tipcast
