#include "oracle.hpp"

#include <cmath>

namespace oracle {

double rk4(const Rhs& f, double t0, double x0, double t1, double h) {
  const double span = t1 - t0;
  const long n = static_cast<long>(std::ceil(std::abs(span) / h));
  const double dt = span / static_cast<double>(n);
  double t = t0, x = x0;
  for (long i = 0; i < n; ++i) {
    const double k1 = f(t, x);
    const double k2 = f(t + dt / 2, x + dt / 2 * k1);
    const double k3 = f(t + dt / 2, x + dt / 2 * k2);
    const double k4 = f(t + dt, x + dt * k3);
    x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t0 + static_cast<double>(i + 1) * dt;
  }
  return x;
}

double pullback(const Rhs& f, double t, double seed_lo, double seed_hi, double span, double h) {
  return 0.5 * (rk4(f, t - span, seed_lo, t, h) + rk4(f, t - span, seed_hi, t, h));
}

double ramp(double y) { return 2 * y * y * y - 3 * y * y + 1; }

double bump(double t, double rho, double L) {
  const double a = std::abs(t);
  if (a <= L) return 1.0;
  if (a >= L + rho) return 0.0;
  return ramp((a - L) / rho);
}

double predation_rhs(double t, double x, double d, double rho, double L, double p) {
  const double r = 1 + 0.2 * std::sin(t) * std::sin(t);
  const double K = 90 + 20 * std::sin(std::sqrt(5.0) * t);
  const double b = 20 + std::cos(t);
  const double phi = -5;
  return r * x * (1 - x / K) + phi - d * bump(t - p, rho, L) * x * x / (b + x * x);
}

double cubic_fold() {
  // 4 - 27 delta^2 = 0
  return std::sqrt(4.0 / 27.0);
}

}  // namespace oracle
