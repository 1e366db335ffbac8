#pragma once

// Property checks shared by the unit tests and the acceptance binary. Each
// returns the worst observed deviation together with a description of where
// it occurred.

#include <cstdint>
#include <string>
#include <vector>

#include "tipcast/classifier.hpp"
#include "tipcast/field.hpp"
#include "tipcast/scenarios.hpp"

namespace props {

struct Worst {
  double value = 0.0;
  std::string where;
};

struct Box {
  double t_lo, t_hi, x_lo, x_hi;
};

/// Relative deviation of g_x from a central difference of g, and of g_xx from
/// a central difference of g_x, at `samples` uniform random points. The
/// relative error uses max(|exact|, 1) as denominator.
Worst ad_vs_fd(const tipcast::ScalarField& f, const Box& box, int samples, std::uint64_t seed);

/// All fields (g, g_minus, g_plus) of every catalog scenario at
/// representative parameters, with the sampling box that fits them.
struct NamedField {
  std::string name;
  tipcast::ScalarField field;
  Box box;
};
std::vector<NamedField> catalog_fields();

/// |Gamma_{rho,L}(c t) - Gamma_{rho/c,L/c}(t)| over random (rho, L, c, t).
Worst rate_identity(int samples, std::uint64_t seed);

/// Worst amount by which the upper attractor of the lower field exceeds that
/// of the upper field, over pairs of pointwise-ordered fields and sample
/// times.
Worst comparison_monotonicity();

/// Built-in examples with their expected classification.
struct Example {
  std::string scenario;
  tipcast::ParameterMap params;
  tipcast::Case expected;
};
std::vector<Example> builtin_examples();

/// Classifies every example at the default options, at integrator
/// tolerances tightened tenfold and at twice the horizon. Returns one line
/// per disagreement with the expectation.
std::vector<std::string> classification_invariance(const std::vector<Example>& examples);

}  // namespace props
