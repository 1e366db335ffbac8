#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tipcast/field.hpp"

namespace tipcast {

struct SolverOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  /// |x| beyond this bound counts as escape to +-infinity.
  double escape_bound = 1e3;
  double max_step = 0.5;
  double min_step = 1e-10;
  /// Maximal spacing of stored samples; longer steps get dense-output
  /// samples in between. Zero or negative disables the insertion.
  double sample_stride = 0.1;
  /// When set, samples strictly before this time (in the integration
  /// direction) are not stored, apart from the initial point.
  std::optional<double> record_from;
};

enum class Direction { Forward, Backward };

enum class Status { Completed, EscapedUp, EscapedDown, StepUnderflow };

const char* to_string(Status status) noexcept;

/// One stored point of a solution, with the slope used for Hermite
/// interpolation.
struct Sample {
  double t;
  double x;
  double dxdt;
};

/// Time-ordered samples of one solution x(t) in the integration direction.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<Sample> samples, Direction direction, Status status, double t_stop);

  const std::vector<Sample>& samples() const { return samples_; }
  Direction direction() const { return direction_; }
  Status status() const { return status_; }
  bool completed() const { return status_ == Status::Completed; }
  bool escaped() const { return status_ == Status::EscapedUp || status_ == Status::EscapedDown; }
  /// Escape time, underflow time, or the final time when completed.
  double t_stop() const { return t_stop_; }

  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }
  double t_min() const;
  double t_max() const;
  bool covers(double t) const { return t >= t_min() && t <= t_max(); }

  /// Cubic Hermite interpolation between stored samples. Throws
  /// std::out_of_range outside [t_min, t_max].
  double value_at(double t) const;

  /// Samples within [t_lo, t_hi] (inclusive of interpolated end points),
  /// in the original direction.
  Trajectory slice(double t_lo, double t_hi) const;

  /// Values interpolated on the grid t_lo, t_lo + stride, ..., t_hi.
  std::vector<Sample> resample(double t_lo, double t_hi, double stride) const;

 private:
  std::vector<Sample> samples_;
  Direction direction_ = Direction::Forward;
  Status status_ = Status::Completed;
  double t_stop_ = 0.0;
};

/// Integrates x' = g(t, x) from (t0, x0) towards t1 (either direction) with
/// the Dormand-Prince 5(4) pair, PI step-size control and dense output.
/// Integration stops early when |x| crosses the escape bound; the crossing
/// time is located on the dense output. Step underflow is reported in the
/// status. Throws IntegrationError if g is not finite at an accepted point.
Trajectory integrate(const ScalarField& field, double t0, double x0, double t1,
                     const SolverOptions& opts = {});

/// Finite-horizon Lyapunov exponent (1/T) * integral of g_x(t, x(t)) dt by the
/// trapezoidal rule over the stored samples. Requires a completed
/// trajectory with positive time span.
double lyapunov_along(const ScalarField& field, const Trajectory& traj);

/// Writes "t,x" CSV rows with 17 significant digits.
void write_csv(std::ostream& os, std::span<const Sample> samples);

}  // namespace tipcast
