#include "tipcast/transitions.hpp"

#include <cmath>
#include <string>

#include "tipcast/error.hpp"

namespace tipcast::transitions {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw FieldError(what);
}

// Disjointness is checked explicitly on the first indices; beyond them the
// phase wobble |p_n - (n-1) L2| <= 1/n is below the tail bound.
constexpr std::int64_t kCheckedIndices = 1'000'000;

}  // namespace

Jet ramp(double y) {
  return {(2.0 * y - 3.0) * y * y + 1.0, 6.0 * y * (y - 1.0), 12.0 * y - 6.0};
}

SplineBump::SplineBump(double rho, double L) : rho_(rho), L_(L) {
  require(rho > 0.0 && std::isfinite(rho), "splinebump: rho must be positive");
  require(L >= 0.0 && std::isfinite(L), "splinebump: L must be nonnegative");
}

Jet SplineBump::jet(double t) const {
  const double a = std::abs(t);
  if (a <= L_) return Jet{1.0};
  if (a >= L_ + rho_) return Jet{0.0};
  // Even function: Q((|t|-L)/rho), with the first derivative odd in t.
  const Jet q = ramp((a - L_) / rho_);
  const double sign = t < 0.0 ? -1.0 : 1.0;
  return {q.v, sign * q.d / rho_, q.dd / (rho_ * rho_)};
}

SplineStep::SplineStep(double rho, double L) : rho_(rho), L_(L) {
  require(rho > 0.0 && std::isfinite(rho), "splinestep: rho must be positive");
  require(std::isfinite(L), "splinestep: L must be finite");
}

Jet SplineStep::jet(double t) const {
  if (t >= -L_) return Jet{1.0};
  if (t <= -L_ - rho_) return Jet{0.0};
  const Jet q = ramp(-(t + L_) / rho_);
  return {q.v, -q.d / rho_, q.dd / (rho_ * rho_)};
}

ImpulseSeries::ImpulseSeries(const Params& params)
    : params_(params), bump_(params.rho, params.L1) {
  const double width = 2.0 * (params.L1 + params.rho);
  require(params.d_plus >= 0.0, "impulseseries: dplus must be nonnegative");
  require(std::isfinite(params.d), "impulseseries: d must be finite");
  require(params.decay_scale > 0.0, "impulseseries: decay scale must be positive");
  require(params.L2 > width, "impulseseries: L2 must exceed 2(L1+rho)");
  for (std::int64_t n = 1; n < kCheckedIndices; ++n) {
    require(phase(n + 1) - phase(n) > width,
            "impulseseries: supports overlap at n=" + std::to_string(n));
  }
  const double tail = 1.0 / static_cast<double>(kCheckedIndices);
  require(params.L2 - 2.0 * tail > width, "impulseseries: supports overlap in the tail");
}

double ImpulseSeries::amplitude(std::int64_t n) const {
  const double s = static_cast<double>(n - 1) / params_.decay_scale + 1.0;
  return params_.d_plus + params_.d / (s * s);
}

double ImpulseSeries::phase(std::int64_t n) const {
  const double wobble = (n % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(n);
  return static_cast<double>(n - 1) * params_.L2 + wobble;
}

Jet ImpulseSeries::jet(double t) const {
  const double reach = bump_.reach();
  // p_n stays within 1 of (n-1) L2, so the only candidate lies in a small
  // window around the nearest period.
  const double guess = std::floor(t / params_.L2 + 0.5) + 1.0;
  if (guess < -1.0) return Jet{0.0};
  const auto centre = static_cast<std::int64_t>(guess);
  for (std::int64_t n = centre - 2; n <= centre + 2; ++n) {
    if (n < 1) continue;
    const double offset = t - phase(n);
    if (std::abs(offset) < reach) {
      const Jet b = bump_.jet(offset);
      const double a = amplitude(n);
      return {a * b.v, a * b.d, a * b.dd};
    }
  }
  return Jet{0.0};
}

Jet ImpulseSeries::periodic_jet(double t) const {
  const double offset = t - params_.L2 * std::floor(t / params_.L2 + 0.5);
  const Jet b = bump_.jet(offset);
  const double a = params_.d_plus;
  return {a * b.v, a * b.d, a * b.dd};
}

ShepherdFactor::ShepherdFactor(double rho, double L, double c) : bump_(rho, L), c_(c) {
  require(L > 0.0, "shepherd: L must be positive");
  require(c > 0.0 && std::isfinite(c), "shepherd: c must be positive");
}

Jet ShepherdFactor::k(double x) const {
  if (x >= 0.0) {
    const double q = 1.0 / (c_ * x + 1.0);
    return {q, -c_ * q * q, 2.0 * c_ * c_ * q * q * q};
  }
  return {1.0 - c_ * x + c_ * c_ * x * x, -c_ + 2.0 * c_ * c_ * x, 2.0 * c_ * c_};
}

Jet ShepherdFactor::k(const Jet& x) const {
  const Jet kx = k(x.v);
  return compose(x, kx.v, kx.d, kx.dd);
}

Jet ShepherdFactor::jet(const Jet& t, const Jet& x) const {
  const Jet arg = Jet{2.0} * t * k(x) - Jet{bump_.L()};
  const Jet b = bump_.jet(arg.v);
  return compose(arg, b.v, b.d, b.dd);
}

}  // namespace tipcast::transitions
