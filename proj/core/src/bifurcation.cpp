#include "tipcast/bifurcation.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "tipcast/error.hpp"

namespace tipcast {

const char* to_string(PairKind kind) noexcept {
  switch (kind) {
    case PairKind::Pair: return "pair";
    case PairKind::SingleSided: return "single_sided";
    case PairKind::NoneFound: return "none_found";
    case PairKind::Unresolved: return "unresolved";
  }
  return "none_found";
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

bool is_a(const Classification& c) { return c.kase == Case::A; }

ClassifyOptions widened(const ClassifyOptions& o) {
  ClassifyOptions w = o;
  w.horizon = 2 * o.horizon;
  w.max_horizon = std::max(o.max_horizon, 2 * w.horizon);
  w.limits.max_window = 2 * o.limits.max_window;
  return w;
}

ClassifyOptions tightened(const ClassifyOptions& o, double factor) {
  ClassifyOptions t = o;
  t.limits.solver.abs_tol /= factor;
  t.limits.solver.rel_tol /= factor;
  // Tighter integration is a different cache key anyway; keep it separate.
  t.cache = nullptr;
  return t;
}

std::string kind_of(const Classification& a, const Classification& b) {
  const Classification& other = is_a(a) ? b : a;
  return std::string("A<->") + to_string(other.kase);
}

class Bisector {
 public:
  Bisector(const Family& family, const ClassifyOptions& opts, const BisectOptions& bopts)
      : family_(family), opts_(opts), bopts_(bopts) {
    opts_.full_witnesses = false;
    if (!opts_.cache) opts_.cache = std::make_shared<LimitCache>();
  }

  Classification at(double v) {
    const TransitionScenario s = family_(v);
    Classification c = classify_robust(s, opts_);
    if (!c.determinate()) c = classify_robust(s, widened(opts_));
    return c;
  }

  CriticalValue run(const std::string& param, double lo, double hi) {
    if (!(lo < hi)) throw BisectError("bisect: need lo < hi");
    CriticalValue cv;
    cv.param = param;
    cv.case_lo = at(lo);
    cv.case_hi = at(hi);
    if (!cv.case_lo.determinate() || !cv.case_hi.determinate()) {
      throw BisectError("bisect: endpoint classification is Indeterminate (" +
                        std::string(cv.case_lo.determinate() ? "hi" : "lo") + ")");
    }
    if (is_a(cv.case_lo) == is_a(cv.case_hi)) {
      throw BisectError(std::string("bisect: both ends are ") +
                        (is_a(cv.case_lo) ? "Case A" : "not Case A") + " (" +
                        to_string(cv.case_lo.kase) + ", " + to_string(cv.case_hi.kase) + ")");
    }
    cv.lo = lo;
    cv.hi = hi;
    while (cv.hi - cv.lo > bopts_.tol) {
      if (++cv.iterations > bopts_.max_iterations) {
        throw BisectError("bisect: iteration limit reached at width " + fmt(cv.hi - cv.lo));
      }
      const double m = 0.5 * (cv.lo + cv.hi);
      if (m <= cv.lo || m >= cv.hi) break;
      Classification c = at(m);
      if (c.determinate()) {
        assign(cv, m, std::move(c));
      } else {
        resolve_band(cv, m);
      }
    }
    cv.kind = kind_of(cv.case_lo, cv.case_hi);
    if (bopts_.verify) verify(cv);
    return cv;
  }

 private:
  void assign(CriticalValue& cv, double m, Classification c) {
    if (is_a(c) == is_a(cv.case_lo)) {
      cv.lo = m;
      cv.case_lo = std::move(c);
    } else {
      cv.hi = m;
      cv.case_hi = std::move(c);
    }
  }

  // m is Indeterminate. Locate the determinate points nearest to the band
  // on both sides; the bracket becomes the band plus those points.
  void resolve_band(CriticalValue& cv, double m) {
    const double step = bopts_.tol / 2;
    double a = cv.lo, b = m;
    while (b - a > step) {
      const double mm = 0.5 * (a + b);
      Classification c = at(mm);
      if (!c.determinate()) {
        b = mm;
      } else if (is_a(c) == is_a(cv.case_lo)) {
        a = mm;
        cv.lo = mm;
        cv.case_lo = std::move(c);
      } else {
        cv.hi = mm;
        cv.case_hi = std::move(c);
        cv.warnings.push_back("Indeterminate value " + fmt(m) + " lies beyond the transition");
        return;
      }
    }
    double a2 = m, b2 = cv.hi;
    while (b2 - a2 > step) {
      const double mm = 0.5 * (a2 + b2);
      Classification c = at(mm);
      if (!c.determinate()) {
        a2 = mm;
      } else if (is_a(c) == is_a(cv.case_hi)) {
        b2 = mm;
        cv.hi = mm;
        cv.case_hi = std::move(c);
      } else {
        cv.lo = mm;
        cv.case_lo = std::move(c);
        cv.warnings.push_back("Indeterminate value " + fmt(m) + " lies before the transition");
        return;
      }
    }
    cv.indeterminate_band = std::make_pair(b, a2);
    cv.warnings.push_back("Indeterminate band [" + fmt(b) + ", " + fmt(a2) + "]");
    if (cv.hi - cv.lo > bopts_.tol) {
      throw BisectError("bisect: Indeterminate band [" + fmt(b) + ", " + fmt(a2) +
                        "] is wider than the tolerance " + fmt(bopts_.tol));
    }
  }

  void verify(CriticalValue& cv) {
    const ClassifyOptions t = tightened(opts_, bopts_.verify_factor);
    const Classification lo = classify_robust(family_(cv.lo), t);
    const Classification hi = classify_robust(family_(cv.hi), t);
    cv.verified = lo.determinate() && hi.determinate() && is_a(lo) == is_a(cv.case_lo) &&
                  is_a(hi) == is_a(cv.case_hi);
    if (!*cv.verified) {
      cv.warnings.push_back(std::string("tighter tolerances give ") + to_string(lo.kase) + " / " +
                            to_string(hi.kase) + " at the bracket ends");
    }
  }

  const Family& family_;
  ClassifyOptions opts_;
  BisectOptions bopts_;
};

}  // namespace

Classification classify_robust(const TransitionScenario& s, const ClassifyOptions& opts) {
  try {
    return classify(s, opts);
  } catch (const LimitError& e) {
    switch (e.kind()) {
      case LimitErrorKind::NoConvergence:
      case LimitErrorKind::SeparationFailure:
      case LimitErrorKind::NonHyperbolic:
      case LimitErrorKind::WrongStabilitySign:
      case LimitErrorKind::SeedEscaped: {
        Classification c;
        c.kase = Case::Indeterminate;
        c.tag = e.what();
        c.horizon = opts.horizon;
        return c;
      }
      default: throw;
    }
  }
}

CriticalValue bisect(const Family& family, const std::string& param, double lo, double hi,
                     const ClassifyOptions& opts, const BisectOptions& bopts) {
  Bisector b(family, opts, bopts);
  return b.run(param, lo, hi);
}

SweepResult sweep(const Family& family, const std::string& param, const std::vector<double>& grid,
                  const ClassifyOptions& opts, int jobs) {
  SweepResult out;
  out.param = param;
  out.points.resize(grid.size());
  ClassifyOptions o = opts;
  if (!o.cache) o.cache = std::make_shared<LimitCache>();

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      SweepPoint& p = out.points[i];
      p.value = grid[i];
      try {
        p.result = classify_robust(family(grid[i]), o);
      } catch (const Error& e) {
        p.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i + 1 < out.points.size(); ++i) {
    const Case a = out.points[i].kase();
    const Case b = out.points[i + 1].kase();
    if (a != Case::Indeterminate && b != Case::Indeterminate && a != b) out.changes.push_back(i);
  }
  return out;
}

PairResult find_tipping_pair(const Family& family, const std::string& param, double lo, double hi,
                             const ClassifyOptions& opts, const PairOptions& popts) {
  if (!(lo < hi) || popts.steps < 1) throw BisectError("find_tipping_pair: empty scan range");
  ClassifyOptions o = opts;
  if (!o.cache) o.cache = std::make_shared<LimitCache>();
  std::vector<double> grid(static_cast<std::size_t>(popts.steps) + 1);
  for (int i = 0; i <= popts.steps; ++i) {
    grid[static_cast<std::size_t>(i)] =
        i == popts.steps ? hi : lo + (hi - lo) * i / popts.steps;
  }

  PairResult out;
  out.scan = sweep(family, param, grid, o, popts.jobs);
  const auto& pts = out.scan.points;
  if (!pts.front().result || !pts.front().result->determinate() || !pts.back().result ||
      !pts.back().result->determinate()) {
    throw BisectError("find_tipping_pair: scan range endpoint is Indeterminate");
  }

  std::optional<std::size_t> first_a, last_a;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].kase() == Case::A) {
      if (!first_a) first_a = i;
      last_a = i;
    }
  }

  if (!first_a) {
    // No A on the grid. A C2|C1 change still implies an A interval between
    // them; look for it by bisection on "is C2".
    for (std::size_t i : out.scan.changes) {
      if (pts[i].kase() != Case::C2 || pts[i + 1].kase() != Case::C1) continue;
      double a = pts[i].value, b = pts[i + 1].value;
      while (b - a > popts.bisect.tol) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const Classification c = classify_robust(family(m), o);
        if (c.kase == Case::A) {
          out.kind = PairKind::Pair;
          out.edges.push_back(bisect(family, param, a, m, o, popts.bisect));
          out.edges.push_back(bisect(family, param, m, b, o, popts.bisect));
          return out;
        }
        if (c.kase == Case::C2) {
          a = m;
        } else if (c.kase == Case::C1) {
          b = m;
        } else {
          break;
        }
      }
      out.kind = PairKind::Unresolved;
      out.unresolved = std::make_pair(a, b);
      return out;
    }
    out.kind = PairKind::NoneFound;
    const Case c0 = pts.front().kase();
    if (std::all_of(pts.begin(), pts.end(), [&](const SweepPoint& p) { return p.kase() == c0; })) {
      out.uniform = c0;
    }
    return out;
  }

  if (*first_a > 0) {
    out.edges.push_back(
        bisect(family, param, pts[*first_a - 1].value, pts[*first_a].value, o, popts.bisect));
  }
  if (*last_a + 1 < pts.size()) {
    out.edges.push_back(
        bisect(family, param, pts[*last_a].value, pts[*last_a + 1].value, o, popts.bisect));
  }
  out.kind = out.edges.size() == 2 ? PairKind::Pair
             : out.edges.empty()   ? PairKind::NoneFound
                                   : PairKind::SingleSided;
  if (out.edges.empty()) out.uniform = Case::A;
  return out;
}

}  // namespace tipcast
