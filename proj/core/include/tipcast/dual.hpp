#pragma once

#include <cmath>

namespace tipcast {

/// Truncated Taylor jet in one variable: value, first and second derivative.
///
/// Arithmetic on jets propagates exact first and second derivatives
/// (second-order forward-mode differentiation), so evaluating an expression
/// with the state seeded as `{x, 1, 0}` yields g, g_x and g_xx at once.
struct Jet {
  double v = 0.0;
  double d = 0.0;
  double dd = 0.0;

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Jet(double value, double d1, double d2) : v(value), d(d1), dd(d2) {}

  static constexpr Jet variable(double value) { return {value, 1.0, 0.0}; }
};

constexpr Jet operator-(const Jet& a) { return {-a.v, -a.d, -a.dd}; }
constexpr Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
constexpr Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
constexpr Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}

/// Reciprocal; the caller is responsible for rejecting a zero value.
constexpr Jet reciprocal(const Jet& b) {
  const double inv = 1.0 / b.v;
  return {inv, -b.d * inv * inv, (2.0 * b.d * b.d * inv - b.dd) * inv * inv};
}

constexpr Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

/// Composes a scalar function, given its value and first two derivatives at
/// `u.v`, with the jet `u` (chain rule to second order).
constexpr Jet compose(const Jet& u, double f, double df, double ddf) {
  return {f, df * u.d, ddf * u.d * u.d + df * u.dd};
}

inline Jet sin(const Jet& u) {
  const double s = std::sin(u.v), c = std::cos(u.v);
  return compose(u, s, c, -s);
}

inline Jet cos(const Jet& u) {
  const double s = std::sin(u.v), c = std::cos(u.v);
  return compose(u, c, -s, -c);
}

inline Jet tan(const Jet& u) {
  const double t = std::tan(u.v);
  const double sec2 = 1.0 + t * t;
  return compose(u, t, sec2, 2.0 * t * sec2);
}

inline Jet atan(const Jet& u) {
  const double q = 1.0 / (1.0 + u.v * u.v);
  return compose(u, std::atan(u.v), q, -2.0 * u.v * q * q);
}

inline Jet sqrt(const Jet& u) {
  const double s = std::sqrt(u.v);
  return compose(u, s, 0.5 / s, -0.25 / (s * u.v));
}

inline Jet exp(const Jet& u) {
  const double e = std::exp(u.v);
  return compose(u, e, e, e);
}

inline Jet log(const Jet& u) {
  const double inv = 1.0 / u.v;
  return compose(u, std::log(u.v), inv, -inv * inv);
}

/// Integer power by repeated squaring on the value part, derivatives by the
/// power rule.
inline Jet ipow(const Jet& u, int n) {
  if (n == 0) return Jet{1.0};
  if (n == 1) return u;
  const double p2 = std::pow(u.v, n - 2);
  const double p1 = p2 * u.v;
  return compose(u, p1 * u.v, n * p1, static_cast<double>(n) * (n - 1) * p2);
}

inline double ipow(double u, int n) {
  switch (n) {
    case 0: return 1.0;
    case 1: return u;
    case 2: return u * u;
    case 3: return u * u * u;
    default: return std::pow(u, n);
  }
}

}  // namespace tipcast
