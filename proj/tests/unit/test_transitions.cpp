#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "properties.hpp"
#include "tipcast/error.hpp"
#include "tipcast/transitions.hpp"

using namespace tipcast;
using namespace tipcast::transitions;

TEST_CASE("ramp polynomial endpoints") {
  CHECK(ramp(0).v == 1.0);
  CHECK(ramp(1).v == 0.0);
  CHECK(ramp(0).d == 0.0);
  CHECK(ramp(1).d == 0.0);
  CHECK(ramp(0.5).v == doctest::Approx(oracle::ramp(0.5)));
}

TEST_CASE("spline bump values") {
  const SplineBump b(1, 5);
  CHECK(b(0) == 1.0);
  CHECK(b(-6) == 0.0);
  CHECK(b(5.5) == doctest::Approx(oracle::ramp(0.5)));
  CHECK(b(5.5) == doctest::Approx(0.5));
  CHECK(b(-5) == 1.0);
  CHECK(b(6.5) == 0.0);
  CHECK_THROWS_AS(SplineBump(0, 5), FieldError);
  CHECK_THROWS_AS(SplineBump(-1, 5), FieldError);
}

TEST_CASE("spline bump matches the piecewise oracle, is C1 and monotone on its ramps") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> urho(0.2, 3), uL(0, 10), uu(-1.3, 1.3);
  for (int i = 0; i < 500; ++i) {
    const double rho = urho(rng), L = uL(rng);
    const SplineBump b(rho, L);
    const double t = uu(rng) * (L + rho);
    CHECK(b(t) == doctest::Approx(oracle::bump(t, rho, L)).epsilon(1e-13));
    CHECK(b(t) >= 0.0);
    CHECK(b(t) <= 1.0);
    // slope continuity at the four joints
    for (double s : {-L - rho, -L, L, L + rho}) {
      const double h = 1e-7 * rho;
      const double left = (b(s) - b(s - h)) / h, right = (b(s + h) - b(s)) / h;
      CHECK(std::abs(left - right) <= 1e-5 / rho);
    }
    const double e = 1e-9;
    if (t < -L && t > -L - rho) CHECK(b.jet(t).d >= -e);
    if (t > L && t < L + rho) CHECK(b.jet(t).d <= e);
  }
}

TEST_CASE("spline step values") {
  const double rho = 1.5, L = 4;
  const SplineStep s(rho, L);
  CHECK(s(-L - rho) == 0.0);
  CHECK(s(-L) == 1.0);
  CHECK(s(-L - rho / 2) == doctest::Approx(0.5));
  CHECK(s(-100) == 0.0);
  CHECK(s(100) == 1.0);
  double prev = 0;
  for (double t = -L - rho - 1; t <= 0; t += 0.01) {
    CHECK(s(t) >= prev - 1e-15);
    prev = s(t);
  }
}

TEST_CASE("rate identity of the spline bump") {
  const props::Worst w = props::rate_identity(20000, 99);
  CHECK_MESSAGE(w.value <= 1e-13, w.where);
}

TEST_CASE("impulse series amplitudes and supports") {
  ImpulseSeries::Params p;
  p.d = 2.5;
  const ImpulseSeries s(p);
  CHECK(s.phase(1) == doctest::Approx(1));
  CHECK(s.amplitude(1) == doctest::Approx(2.8));
  CHECK(s(1) == doctest::Approx(2.8));
  CHECK(s(1 - p.L1 - p.rho - 0.01) == 0.0);
  CHECK(s(-1000) == 0.0);
  const double gap = 0.5 * (s.phase(1) + p.L1 + p.rho + s.phase(2) - p.L1 - p.rho);
  CHECK(s(gap) == 0.0);
  // amplitude formula for a few n
  for (int n = 1; n < 6; ++n) {
    const double dn = 0.3 + 2.5 / std::pow((n - 1) / 20.0 + 1, 2);
    CHECK(s.amplitude(n) == doctest::Approx(dn));
    CHECK(s.phase(n) == doctest::Approx((n - 1) * 40.0 + std::pow(-1.0, n - 1) / n));
  }
}

TEST_CASE("impulse series rejects overlapping supports") {
  ImpulseSeries::Params p;
  p.L2 = 20;
  CHECK_THROWS_AS(ImpulseSeries{p}, FieldError);
  p = {};
  p.rho = 0;
  CHECK_THROWS_AS(ImpulseSeries{p}, FieldError);
}

TEST_CASE("periodic limit is L2-periodic and attracts the series") {
  ImpulseSeries::Params p;
  p.d = 2;
  const ImpulseSeries s(p);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(-500, 500);
  for (int i = 0; i < 500; ++i) {
    const double t = ut(rng);
    CHECK(s.periodic(t) == doctest::Approx(s.periodic(t + 40)).epsilon(1e-12));
  }
  double far = 0, near = 0;
  for (double t = 0; t < 400; t += 0.1) near = std::max(near, std::abs(s(t) - s.periodic(t)));
  for (double t = 40000; t < 40400; t += 0.1) far = std::max(far, std::abs(s(t) - s.periodic(t)));
  CHECK(far < near);
  CHECK(far < 0.01);
}

TEST_CASE("shepherd factor") {
  const double rho = 1, L = 20, c = 0.02;
  const ShepherdFactor f(rho, L, c);
  for (double x : {0.0, 3.0, 50.0}) {
    CHECK(f(0, x) == doctest::Approx(1));
    CHECK(f(L * (c * x + 1), x) == doctest::Approx(1));
    CHECK(f((2 * L + rho) * (c * x + 1) / 2, x) == doctest::Approx(0).epsilon(1e-12));
    CHECK(f((2 * L + rho) * (c * x + 1) / 2 + 1, x) == 0.0);
    CHECK(f.k(x).v == doctest::Approx(1 / (c * x + 1)));
  }
  // C2 match of k at zero
  const Jet kp = f.k(1e-12), km = f.k(-1e-12);
  CHECK(kp.d == doctest::Approx(km.d));
  CHECK(kp.dd == doctest::Approx(km.dd));
  CHECK(f.k(-2).v == doctest::Approx(1 + 2 * c + 4 * c * c));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ut(-50, 100), ux(-10, 100);
  for (int i = 0; i < 1000; ++i) {
    const double v = f(ut(rng), ux(rng));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
