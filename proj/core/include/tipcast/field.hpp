#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "tipcast/dual.hpp"
#include "tipcast/expr.hpp"

namespace tipcast {

using ParameterMap = std::map<std::string, double>;

/// State interval [lo, hi] outside which the field has a fixed sign.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {
struct Program;
}

/// A field expression with all of its parameters bound, compiled for fast
/// evaluation of g(t, x), g_x and g_xx.
///
/// Construction folds every subexpression that depends on neither t nor x
/// and instantiates the transition primitives; unbound parameters and
/// invalid primitive shapes are reported there as FieldError. Instances are
/// immutable and cheap to copy; evaluation is reentrant.
class ScalarField {
 public:
  ScalarField(FieldExpr expr, ParameterMap bindings = {});

  static ScalarField parse(std::string_view text, ParameterMap bindings = {}) {
    return ScalarField(FieldExpr::parse(text), std::move(bindings));
  }

  /// g(t, x). Throws FieldError on a domain error.
  double eval(double t, double x) const;
  double eval_dx(double t, double x) const { return eval_jet(t, x).d; }
  double eval_dxx(double t, double x) const { return eval_jet(t, x).dd; }
  /// g, g_x and g_xx in one pass.
  Jet eval_jet(double t, double x) const;

  const FieldExpr& expr() const { return expr_; }
  const ParameterMap& bindings() const { return bindings_; }

  /// Expression text followed by the bindings it uses; equal strings mean
  /// equal fields.
  std::string canonical() const;

  const std::optional<Bracket>& coercivity_hint() const { return hint_; }
  ScalarField with_coercivity_hint(Bracket bracket) const;

 private:
  FieldExpr expr_;
  ParameterMap bindings_;
  std::shared_ptr<const detail::Program> program_;
  std::optional<Bracket> hint_;
};

}  // namespace tipcast
