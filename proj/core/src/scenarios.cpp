#include "tipcast/scenarios.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "tipcast/error.hpp"

namespace tipcast {

namespace {

// Coefficients of the logistic predation models.
const std::string kLogisticR = "(1 + 0.2*sin(t)^2)";
const std::string kLogisticK = "(90 + 20*sin(sqrt(5)*t))";
const std::string kLogisticB = "(20 + cos(t))";
const std::string kLogistic = kLogisticR + "*x*(1 - x/" + kLogisticK + ")";
const std::string kPhi = "(-5)";
const std::string kPsi = "(-9 - cos(t))";
const std::string kHolling = "x^2/(" + kLogisticB + " + x^2)";

// Coefficients of the Allee-effect models.
const std::string kAlleeR = "(0.7 + 0.3*sin(t)^2)";
const std::string kAlleeK = "(70 + 20*cos(sqrt(5)*t))";
const std::string kAlleeS = "(20 + 30*cos(sqrt(3)*t)^2)";
const std::string kAllee =
    kAlleeR + "*x*(1 - x/" + kAlleeK + ")*(x - " + kAlleeS + ")/" + kAlleeK;

const std::string kFig7Base = "-x^3 + sin(t) + sin(sqrt(2)*t) + 5/2*x";
const std::string kFig7Shift = "a*(3*x^2 - 3*a*x + a^2 - 5/2)";

std::string order_field(const std::string& alpha) {
  return "-x^3 + x + " + alpha + "*(3*x^2*a - 3*x*a^2 + a^3 - a) + " + alpha + "*(1 - " + alpha +
         ")*b";
}

ParamSpec req(std::string name, ParamRange range, std::string doc) {
  return {std::move(name), std::nullopt, range, std::move(doc)};
}

ParamSpec opt(std::string name, double v, ParamRange range, std::string doc) {
  return {std::move(name), v, range, std::move(doc)};
}

std::vector<CatalogEntry> make_catalog() {
  using R = ParamRange;
  std::vector<CatalogEntry> c;

  c.push_back({"concave_pred",
               "logistic growth with emigration and a transient Holling III predation bump",
               LimitClass::Concave,
               {req("d", R::NonNegative, "predation amplitude"),
                req("rho", R::Positive, "ramp width"),
                req("L", R::NonNegative, "plateau half-width"), req("p", R::Any, "phase")},
               kLogistic + " + " + kPhi + " - d*splinebump(t - p; rho, L)*" + kHolling,
               kLogistic + " + " + kPhi,
               kLogistic + " + " + kPhi,
               {}});

  c.push_back({"concave_pred_migration",
               "concave_pred with emigration stepping from -5 to -9 - cos t at predator arrival",
               LimitClass::Concave,
               {req("d", R::NonNegative, "predation amplitude"),
                req("rho", R::Positive, "ramp width"),
                req("L", R::NonNegative, "plateau half-width"), req("p", R::Any, "phase")},
               kLogistic + " + " + kPhi + " + (" + kPsi + " - " + kPhi +
                   ")*splinestep(t - p; rho, L) - d*splinebump(t - p; rho, L)*" + kHolling,
               kLogistic + " + " + kPhi,
               kLogistic + " + " + kPsi,
               {}});

  c.push_back({"safety_halfline",
               "logistic growth with constant migration delta; its Case A/C boundary is delta_0",
               LimitClass::Concave,
               {req("delta", R::Any, "constant migration rate")},
               kLogistic + " + delta",
               kLogistic + " + delta",
               kLogistic + " + delta",
               {}});

  c.push_back({"dconcave_series",
               "Allee growth under a series of predation seasons tending to a periodic regime",
               LimitClass::DConcave,
               {req("d", R::NonNegative, "extra amplitude of the early seasons"),
                opt("rho", 1.0, R::Positive, "ramp width"),
                opt("L1", 10.0, R::NonNegative, "season half-width"),
                opt("L2", 40.0, R::Positive, "season period"),
                opt("d_plus", 0.3, R::NonNegative, "limit amplitude"),
                opt("q", 20.0, R::Positive, "amplitude decay scale")},
               kAllee + " - impulseseries(t; rho, L1, L2, d_plus, d, q)*x^2/(200 + x^2)",
               kAllee,
               kAllee + " - periodicseries(t; rho, L1, L2, d_plus)*x^2/(200 + x^2)",
               {0.1, 0.05, std::nullopt, std::nullopt}});

  c.push_back({"dconcave_livestock",
               "Allee growth with predation active until shepherds cover the herd",
               LimitClass::DConcave,
               {req("d", R::NonNegative, "predation amplitude"),
                req("L", R::Positive, "shepherd coverage time scale"),
                req("c", R::Positive, "herd size sensitivity"),
                opt("rho", 1.0, R::Positive, "ramp width")},
               kAllee + " - d*shepherd(t, x; rho, L, c)*" + kHolling,
               kAllee,
               kAllee,
               {}});

  c.push_back({"fig7_nonconcave",
               "cubic with quasiperiodic forcing shifted by a along an arctan transition",
               LimitClass::DConcave,
               {req("a", R::Any, "shift of the future equation")},
               kFig7Base + " + (atan(5*t)/pi + 1/2)*" + kFig7Shift,
               kFig7Base,
               kFig7Base + " + " + kFig7Shift,
               {1e-2, 1e-2, std::nullopt, std::nullopt}});

  c.push_back({"order_example",
               "cubic h_b(x, alpha) along alpha = arctan(t)/pi + 1/2",
               LimitClass::DConcave,
               {req("b", R::Any, "bias of the transition"),
                opt("a", std::sqrt(10.0), R::Any, "shift of the future equation")},
               order_field("(atan(t)/pi + 1/2)"),
               order_field("0"),
               order_field("1"),
               {1e-2, 1e-2, std::nullopt, std::nullopt}});

  c.push_back({"quadratic_shift",
               "autonomous -x^2 + 1 + delta",
               LimitClass::Concave,
               {req("delta", R::Any, "constant shift")},
               "-x^2 + 1 + delta",
               "-x^2 + 1 + delta",
               "-x^2 + 1 + delta",
               {}});

  c.push_back({"cubic_shift",
               "autonomous -x^3 + x + delta",
               LimitClass::DConcave,
               {req("delta", R::Any, "constant shift")},
               "-x^3 + x + delta",
               "-x^3 + x + delta",
               "-x^3 + x + delta",
               {}});

  return c;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_range(const ParamSpec& spec, double v) {
  const std::string path = "params." + spec.name;
  if (!std::isfinite(v)) throw ConfigError(path, "value must be finite");
  if (spec.range == ParamRange::Positive && !(v > 0)) {
    throw ConfigError(path, "must be positive, got " + fmt(v));
  }
  if (spec.range == ParamRange::NonNegative && !(v >= 0)) {
    throw ConfigError(path, "must be nonnegative, got " + fmt(v));
  }
}

ScalarField field_of(const std::string& text, const ParameterMap& params, const char* which) {
  if (text.empty()) throw ConfigError(std::string("scenario.") + which, "missing field");
  try {
    return ScalarField(FieldExpr::parse(text), params);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("scenario.") + which, e.what());
  } catch (const FieldError& e) {
    throw ConfigError(std::string("scenario.") + which, e.what());
  }
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = make_catalog();
  return entries;
}

const CatalogEntry* find_scenario(std::string_view name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

TransitionScenario build(std::string_view name, const ParameterMap& params) {
  const CatalogEntry* entry = find_scenario(name);
  if (!entry) throw ConfigError("scenario", "unknown scenario '" + std::string(name) + "'");
  std::set<std::string> known;
  ParameterMap bound;
  for (const auto& spec : entry->params) {
    known.insert(spec.name);
    if (auto it = params.find(spec.name); it != params.end()) {
      bound[spec.name] = it->second;
    } else if (spec.default_value) {
      bound[spec.name] = *spec.default_value;
    } else {
      throw ConfigError("params." + spec.name,
                        "missing parameter for scenario '" + entry->name + "'");
    }
    check_range(spec, bound[spec.name]);
  }
  for (const auto& [k, v] : params) {
    if (!known.count(k)) {
      throw ConfigError("params." + k, "unknown parameter for scenario '" + entry->name + "'");
    }
  }
  return TransitionScenario{entry->name,
                            entry->cls,
                            field_of(entry->g, bound, "g"),
                            field_of(entry->g_minus, bound, "g_minus"),
                            field_of(entry->g_plus, bound, "g_plus"),
                            bound,
                            entry->tuning};
}

TransitionScenario build(const ScenarioDefinition& def) {
  return TransitionScenario{def.name,
                            def.cls,
                            field_of(def.g, def.params, "g"),
                            field_of(def.g_minus, def.params, "g_minus"),
                            field_of(def.g_plus, def.params, "g_plus"),
                            def.params,
                            def.tuning};
}

Family family(std::string_view name, ParameterMap base, std::string param) {
  return [name = std::string(name), base = std::move(base),
          param = std::move(param)](double v) {
    ParameterMap p = base;
    p[param] = v;
    return build(name, p);
  };
}

Family family(ScenarioDefinition def, std::string param) {
  return [def = std::move(def), param = std::move(param)](double v) {
    ScenarioDefinition d = def;
    d.params[param] = v;
    return build(d);
  };
}

}  // namespace tipcast
