#pragma once

// Transition-function primitives: the C^1 cubic bump and step, the impulse
// series of predation seasons and its periodic limit, and the x-dependent
// shepherd factor. Every primitive returns its value together with the
// first two derivatives with respect to its argument so that the field
// evaluator can differentiate through it.

#include <cstdint>

#include "tipcast/dual.hpp"

namespace tipcast::transitions {

/// Ramp polynomial Q(y) = 2y^3 - 3y^2 + 1 with its derivatives. Q(0)=1,
/// Q(1)=0 and Q'(0)=Q'(1)=0.
Jet ramp(double y);

/// Gamma_{rho,L}: 1 on [-L, L], 0 outside [-L-rho, L+rho], cubic ramps in
/// between.
class SplineBump {
 public:
  SplineBump(double rho, double L);

  double operator()(double t) const { return jet(t).v; }
  /// Value and derivatives with respect to t.
  Jet jet(double t) const;

  double rho() const { return rho_; }
  double L() const { return L_; }
  /// Half-width of the support.
  double reach() const { return L_ + rho_; }

 private:
  double rho_;
  double L_;
};

/// Lambda_{rho,L}: 0 for t <= -L-rho, 1 for t >= -L; the rising half of the
/// bump.
class SplineStep {
 public:
  SplineStep(double rho, double L);

  double operator()(double t) const { return jet(t).v; }
  Jet jet(double t) const;

  double rho() const { return rho_; }
  double L() const { return L_; }

 private:
  double rho_;
  double L_;
};

/// Delta_{(d_n)}(t) = sum_{n>=1} d_n Gamma_{rho,L1}(t - p_n) with
///   d_n = d_plus + d / ((n-1)/q + 1)^2,
///   p_n = (n-1) L2 + (-1)^(n-1) / n.
/// q = 20 is the default amplitude decay scale; q = 4 gives the variant
/// used for the series illustration.
class ImpulseSeries {
 public:
  struct Params {
    double rho = 1.0;
    double L1 = 10.0;
    double L2 = 40.0;
    double d_plus = 0.3;
    double d = 0.0;
    double decay_scale = 20.0;
  };

  /// Throws FieldError unless rho > 0, L1 >= 0, d_plus >= 0, decay_scale > 0
  /// and consecutive supports are disjoint.
  explicit ImpulseSeries(const Params& params);

  double amplitude(std::int64_t n) const;
  double phase(std::int64_t n) const;

  double operator()(double t) const { return jet(t).v; }
  Jet jet(double t) const;

  /// Delta_+(t) = sum_{n in Z} d_plus Gamma_{rho,L1}(t - (n-1) L2).
  double periodic(double t) const { return periodic_jet(t).v; }
  Jet periodic_jet(double t) const;

  const Params& params() const { return params_; }

 private:
  Params params_;
  SplineBump bump_;
};

/// Lambda_{L,c}(t, x) = Gamma_{rho,L}(2 t k(x) - L), with k(x) = 1/(cx+1)
/// for x >= 0 and the matching quadratic 1 - cx + c^2 x^2 for x < 0.
class ShepherdFactor {
 public:
  ShepherdFactor(double rho, double L, double c);

  /// k and its derivatives at x.
  Jet k(double x) const;
  /// k composed with a jet in x.
  Jet k(const Jet& x) const;

  double operator()(double t, double x) const { return jet(Jet{t}, Jet::variable(x)).v; }
  /// Value and x-derivatives, with both arguments given as jets in x.
  Jet jet(const Jet& t, const Jet& x) const;

  double rho() const { return bump_.rho(); }
  double L() const { return bump_.L(); }
  double c() const { return c_; }

 private:
  SplineBump bump_;
  double c_;
};

}  // namespace tipcast::transitions
