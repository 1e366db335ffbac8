#include "tipcast/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tipcast/error.hpp"

namespace tipcast {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension of order 4.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants.
constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;  // h_new / h stays within [kFacMin, kFacMax]
constexpr double kFacMax = 10.0;
constexpr double kBeta = 0.04;
constexpr double kExpo1 = 0.2 - kBeta * 0.75;

struct Dense {
  double r1, r2, r3, r4, r5;
  double operator()(double theta) const {
    const double th1 = 1.0 - theta;
    return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
  }
};

[[noreturn]] void not_finite(double t, double x) {
  std::ostringstream os;
  os.precision(17);
  os << "field is not finite at (t=" << t << ", x=" << x << ")";
  throw IntegrationError(os.str());
}

double initial_step(const ScalarField& g, double t0, double x0, double f0, double sign,
                    const SolverOptions& opts) {
  const double sk = opts.abs_tol + opts.rel_tol * std::abs(x0);
  const double dnf = (f0 / sk) * (f0 / sk);
  const double dny = (x0 / sk) * (x0 / sk);
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, opts.max_step);
  const double f1 = g.eval(t0 + sign * h, x0 + sign * h * f0);
  const double der2 = std::isfinite(f1) ? std::abs(f1 - f0) / sk / h : 1e30;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, opts.max_step});
}

}  // namespace

const char* to_string(Status status) noexcept {
  switch (status) {
    case Status::Completed: return "completed";
    case Status::EscapedUp: return "escaped_up";
    case Status::EscapedDown: return "escaped_down";
    case Status::StepUnderflow: return "step_underflow";
  }
  return "unknown";
}

Trajectory::Trajectory(std::vector<Sample> samples, Direction direction, Status status,
                       double t_stop)
    : samples_(std::move(samples)), direction_(direction), status_(status), t_stop_(t_stop) {}

double Trajectory::t_min() const {
  return direction_ == Direction::Forward ? samples_.front().t : samples_.back().t;
}

double Trajectory::t_max() const {
  return direction_ == Direction::Forward ? samples_.back().t : samples_.front().t;
}

double Trajectory::value_at(double t) const {
  if (samples_.empty() || !covers(t)) {
    throw std::out_of_range("Trajectory::value_at: time outside the sampled range");
  }
  if (samples_.size() == 1) return samples_.front().x;
  // Index of the first sample at or past t in the integration direction.
  std::size_t hi;
  if (direction_ == Direction::Forward) {
    hi = static_cast<std::size_t>(
        std::lower_bound(samples_.begin(), samples_.end(), t,
                         [](const Sample& s, double v) { return s.t < v; }) -
        samples_.begin());
  } else {
    hi = static_cast<std::size_t>(
        std::lower_bound(samples_.begin(), samples_.end(), t,
                         [](const Sample& s, double v) { return s.t > v; }) -
        samples_.begin());
  }
  if (hi == 0) return samples_.front().x;
  if (hi >= samples_.size()) return samples_.back().x;
  const Sample& a = samples_[hi - 1];
  const Sample& b = samples_[hi];
  if (b.t == t) return b.x;
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.x + (s3 - 2 * s2 + s) * h * a.dxdt + (-2 * s3 + 3 * s2) * b.x +
         (s3 - s2) * h * b.dxdt;
}

Trajectory Trajectory::slice(double t_lo, double t_hi) const {
  std::vector<Sample> out;
  auto slope_at = [&](double t) {
    // Central difference of the interpolant; only used for the synthetic end points.
    const double eps = 1e-6;
    const double lo = std::max(t_min(), t - eps), hi = std::min(t_max(), t + eps);
    return hi > lo ? (value_at(hi) - value_at(lo)) / (hi - lo) : 0.0;
  };
  const double first = direction_ == Direction::Forward ? t_lo : t_hi;
  const double last = direction_ == Direction::Forward ? t_hi : t_lo;
  out.push_back({first, value_at(first), slope_at(first)});
  for (const Sample& s : samples_) {
    if (s.t > t_lo && s.t < t_hi) out.push_back(s);
  }
  if (last != first) out.push_back({last, value_at(last), slope_at(last)});
  return Trajectory(std::move(out), direction_, Status::Completed, last);
}

std::vector<Sample> Trajectory::resample(double t_lo, double t_hi, double stride) const {
  std::vector<Sample> out;
  const auto n = static_cast<long>(std::floor((t_hi - t_lo) / stride + 1e-9));
  out.reserve(static_cast<std::size_t>(n) + 2);
  for (long i = 0; i <= n; ++i) {
    const double t = t_lo + static_cast<double>(i) * stride;
    if (!covers(t)) continue;
    out.push_back({t, value_at(t), 0.0});
  }
  return out;
}

Trajectory integrate(const ScalarField& g, double t0, double x0, double t1,
                     const SolverOptions& opts) {
  if (t0 == t1) throw IntegrationError("integrate: t0 equals t1");
  if (!(std::abs(x0) < opts.escape_bound)) {
    throw IntegrationError("integrate: initial state outside the escape bound");
  }
  const double sign = t1 > t0 ? 1.0 : -1.0;
  const Direction direction = sign > 0 ? Direction::Forward : Direction::Backward;
  const double bound = opts.escape_bound;
  const bool strided = opts.sample_stride > 0.0;

  double t = t0, x = x0;
  double k1 = g.eval(t, x);
  if (!std::isfinite(k1)) not_finite(t, x);

  std::vector<Sample> samples;
  // Before record_from only the latest point is kept, so that the stored
  // samples begin at the step endpoint at or before the recording time.
  auto recording = [&](double time) {
    return !opts.record_from || sign * (time - *opts.record_from) >= 0.0;
  };
  Sample pending{t, x, k1};
  bool started = recording(t);
  if (started) samples.push_back(pending);

  auto store = [&](const Sample& s) {
    if (started) {
      samples.push_back(s);
    } else if (recording(s.t)) {
      samples.push_back(pending);
      samples.push_back(s);
      started = true;
    } else {
      pending = s;
    }
  };

  double h = sign * initial_step(g, t, x, k1, sign, opts);
  double facold = 1e-4;
  bool rejected = false;
  Status status = Status::Completed;
  double t_stop = t1;

  while (sign * (t1 - t) > 0.0) {
    if (std::abs(h) > opts.max_step) h = sign * opts.max_step;
    bool last = false;
    if (sign * (t + h - t1) >= 0.0) {
      h = t1 - t;
      last = true;
    }
    const double h_floor = std::max(opts.min_step, 16.0 * std::numeric_limits<double>::epsilon() * std::abs(t));
    if (std::abs(h) < h_floor) {
      status = Status::StepUnderflow;
      t_stop = t;
      break;
    }

    const double k2 = g.eval(t + c2 * h, x + h * a21 * k1);
    const double k3 = g.eval(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
    const double k4 = g.eval(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = g.eval(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double t_new = last ? t1 : t + h;
    const double k6 = g.eval(t_new, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double x_new = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double k7 = g.eval(t_new, x_new);

    const double sk = opts.abs_tol + opts.rel_tol * std::max(std::abs(x), std::abs(x_new));
    const double err =
        std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)) / sk;
    if (!std::isfinite(err) || !std::isfinite(x_new)) {
      h *= 0.25;
      rejected = true;
      continue;
    }

    const double fac11 = std::pow(err, kExpo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
      double h_new = h / fac;
      facold = std::max(err, 1e-4);

      const double dx = x_new - x;
      const Dense dense{x, dx, h * k1 - dx, dx - h * k7 - (h * k1 - dx),
                        h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7)};

      double theta_end = 1.0;
      const bool escaping = std::abs(x_new) > bound;
      if (escaping) {
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
          const double mid = 0.5 * (lo + hi);
          if (std::abs(dense(mid)) > bound) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        theta_end = hi;
      }

      if (strided && std::abs(h) * theta_end > opts.sample_stride) {
        const auto pieces = static_cast<int>(std::ceil(std::abs(h) * theta_end / opts.sample_stride));
        for (int i = 1; i < pieces; ++i) {
          const double theta = theta_end * static_cast<double>(i) / pieces;
          const double ts = t + theta * h;
          const double xs = dense(theta);
          store({ts, xs, g.eval(ts, xs)});
        }
      }

      if (escaping) {
        const double te = t + theta_end * h;
        const double xe = x_new > 0.0 ? bound : -bound;
        const double fe = g.eval(te, xe);
        store({te, xe, std::isfinite(fe) ? fe : 0.0});
        status = x_new > 0.0 ? Status::EscapedUp : Status::EscapedDown;
        t_stop = te;
        break;
      }

      if (!std::isfinite(k7)) not_finite(t_new, x_new);
      t = t_new;
      x = x_new;
      k1 = k7;
      store({t, x, k7});
      if (rejected) {
        h_new = sign * std::min(std::abs(h_new), std::abs(h));
        rejected = false;
      }
      h = h_new;
    } else {
      h /= std::min(1.0 / kFacMin, fac11 / kSafety);
      rejected = true;
    }
  }
  if (!started) samples.push_back(pending);
  if (status == Status::Completed) t_stop = t;
  return Trajectory(std::move(samples), direction, status, t_stop);
}

double lyapunov_along(const ScalarField& g, const Trajectory& traj) {
  if (!traj.completed()) throw IntegrationError("lyapunov_along: trajectory did not complete");
  const auto& s = traj.samples();
  if (s.size() < 2) throw IntegrationError("lyapunov_along: empty time span");
  const double span = s.back().t - s.front().t;
  if (span == 0.0) throw IntegrationError("lyapunov_along: empty time span");
  double acc = 0.0;
  double prev = g.eval_dx(s.front().t, s.front().x);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double cur = g.eval_dx(s[i].t, s[i].x);
    acc += 0.5 * (prev + cur) * (s[i].t - s[i - 1].t);
    prev = cur;
  }
  return acc / span;
}

void write_csv(std::ostream& os, std::span<const Sample> samples) {
  os << "t,x\n";
  char buf[64];
  for (const Sample& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t, s.x);
    os << buf;
  }
}

}  // namespace tipcast
