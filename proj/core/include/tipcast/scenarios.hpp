#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tipcast/classifier.hpp"

namespace tipcast {

enum class ParamRange { Any, Positive, NonNegative };

struct ParamSpec {
  std::string name;
  /// Unset for required parameters.
  std::optional<double> default_value;
  ParamRange range = ParamRange::Any;
  std::string doc;
};

/// A built-in scenario: expression templates over named parameters.
struct CatalogEntry {
  std::string name;
  std::string summary;
  LimitClass cls;
  std::vector<ParamSpec> params;
  std::string g;
  std::string g_minus;
  std::string g_plus;
  ScenarioTuning tuning;
};

/// All built-in scenarios in a fixed order.
const std::vector<CatalogEntry>& catalog();
const CatalogEntry* find_scenario(std::string_view name);

/// Binds the parameters of a built-in scenario. Throws ConfigError for an
/// unknown name, a missing or unknown parameter, or a value outside the
/// admissible range.
TransitionScenario build(std::string_view name, const ParameterMap& params);

/// User-defined scenario: three expressions and a class tag.
struct ScenarioDefinition {
  std::string name = "inline";
  LimitClass cls = LimitClass::Concave;
  std::string g;
  std::string g_minus;
  std::string g_plus;
  ParameterMap params;
  ScenarioTuning tuning;
};

/// Parses and binds an inline definition. Empty expressions are reported as
/// ConfigError naming the field; parse errors are forwarded.
TransitionScenario build(const ScenarioDefinition& def);

/// One-parameter family: the scenario with `param` set to the argument.
using Family = std::function<TransitionScenario(double)>;

Family family(std::string_view name, ParameterMap base, std::string param);
Family family(ScenarioDefinition def, std::string param);

}  // namespace tipcast
