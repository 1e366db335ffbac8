#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tipcast/io.hpp"
#include "tipcast/limits.hpp"
#include "tipcast/transitions.hpp"

namespace props {

using namespace tipcast;

namespace {

void keep_worst(Worst& w, double v, const std::string& where) {
  if (v > w.value || std::isnan(v)) {
    w.value = v;
    w.where = where;
  }
}

std::string at(double t, double x) {
  std::ostringstream os;
  os.precision(10);
  os << "(t=" << t << ", x=" << x << ")";
  return os.str();
}

}  // namespace

Worst ad_vs_fd(const ScalarField& f, const Box& box, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(box.t_lo, box.t_hi), ux(box.x_lo, box.x_hi);
  Worst w;
  for (int i = 0; i < samples; ++i) {
    const double t = ut(rng), x = ux(rng);
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    const Jet j = f.eval_jet(t, x);
    const double fd1 = (f.eval(t, x + h) - f.eval(t, x - h)) / (2 * h);
    const double fd2 = (f.eval_dx(t, x + h) - f.eval_dx(t, x - h)) / (2 * h);
    keep_worst(w, std::abs(j.d - fd1) / std::max(std::abs(j.d), 1.0), "g_x at " + at(t, x));
    keep_worst(w, std::abs(j.dd - fd2) / std::max(std::abs(j.dd), 1.0), "g_xx at " + at(t, x));
  }
  return w;
}

std::vector<NamedField> catalog_fields() {
  const std::vector<std::pair<std::string, ParameterMap>> picks = {
      {"concave_pred", {{"d", 20}, {"rho", 1}, {"L", 10}, {"p", 0}}},
      {"concave_pred_migration", {{"d", 16}, {"rho", 1}, {"L", 10}, {"p", 2}}},
      {"safety_halfline", {{"delta", -3}}},
      {"dconcave_series", {{"d", 2}}},
      {"dconcave_livestock", {{"d", 3}, {"L", 10}, {"c", 0.02}}},
      {"fig7_nonconcave", {{"a", 4.2}}},
      {"order_example", {{"b", 5}}},
      {"quadratic_shift", {{"delta", 0.5}}},
      {"cubic_shift", {{"delta", 0.1}}},
  };
  std::vector<NamedField> out;
  for (const auto& [name, params] : picks) {
    const TransitionScenario s = build(name, params);
    Box box{-60, 200, -5, 130};
    if (name == "fig7_nonconcave" || name == "order_example" || name == "cubic_shift" ||
        name == "quadratic_shift") {
      box = {-30, 30, -6, 8};
    }
    out.push_back({name + ".g", s.g, box});
    out.push_back({name + ".g_minus", s.g_minus, box});
    out.push_back({name + ".g_plus", s.g_plus, box});
  }
  return out;
}

Worst rate_identity(int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> urho(0.1, 3), uL(0, 20), uc(0.1, 10), uu(-1.5, 1.5);
  Worst w;
  for (int i = 0; i < samples; ++i) {
    const double rho = urho(rng), L = uL(rng), c = uc(rng);
    // t chosen so that c t covers the plateau, both ramps and the outside.
    const double t = uu(rng) * (L + rho) / c;
    const transitions::SplineBump a(rho, L), b(rho / c, L / c);
    std::ostringstream os;
    os.precision(10);
    os << "rho=" << rho << " L=" << L << " c=" << c << " t=" << t;
    keep_worst(w, std::abs(a(c * t) - b(t)), os.str());
  }
  return w;
}

Worst comparison_monotonicity() {
  // Pairs (lower, upper) with lower <= upper pointwise.
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"-x^2 + 1 - 0.3*cos(t)^2", "-x^2 + 1"},
      {"(1 + 0.2*sin(t)^2)*x*(1 - x/(90 + 20*sin(sqrt(5)*t))) - 6",
       "(1 + 0.2*sin(t)^2)*x*(1 - x/(90 + 20*sin(sqrt(5)*t))) - 5"},
      {"(1 + 0.2*sin(t)^2)*x*(1 - x/(90 + 20*sin(sqrt(5)*t))) - 5 - 2*cos(t)^2",
       "(1 + 0.2*sin(t)^2)*x*(1 - x/(90 + 20*sin(sqrt(5)*t))) - 5"},
      {"-x^3 + x + 0.2*sin(t) - 0.1", "-x^3 + x + 0.2*sin(t)"},
  };
  const LimitClass classes[] = {LimitClass::Concave, LimitClass::Concave, LimitClass::Concave,
                                LimitClass::DConcave};
  Worst w;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ScalarField lo = ScalarField::parse(pairs[i].first);
    const ScalarField hi = ScalarField::parse(pairs[i].second);
    const LimitWindow win{-20, 20};
    const LimitStructure a = limit_structure(lo, classes[i], win, {});
    const LimitStructure b = limit_structure(hi, classes[i], win, {});
    for (double t = -20; t <= 20; t += 0.5) {
      keep_worst(w, a.upper().value_at(t) - b.upper().value_at(t),
                 pairs[i].first + " at t=" + std::to_string(t));
    }
  }
  return w;
}

std::vector<Example> builtin_examples() {
  return {
      {"concave_pred", {{"d", 0}, {"rho", 1}, {"L", 10}, {"p", 0}}, Case::A},
      {"concave_pred", {{"d", 20}, {"rho", 1}, {"L", 10}, {"p", 0}}, Case::A},
      {"concave_pred", {{"d", 21}, {"rho", 1}, {"L", 10}, {"p", 0}}, Case::C},
      {"concave_pred", {{"d", 25}, {"rho", 1}, {"L", 10}, {"p", 0}}, Case::C},
      {"concave_pred", {{"d", 42}, {"rho", 1}, {"L", 1}, {"p", 0}}, Case::C},
      {"concave_pred", {{"d", 42}, {"rho", 1}, {"L", 1}, {"p", 2}}, Case::A},
      {"concave_pred", {{"d", 42}, {"rho", 1}, {"L", 1}, {"p", 5}}, Case::C},
      {"dconcave_livestock", {{"d", 2.58}, {"L", 20}, {"c", 0.02}}, Case::A},
      {"dconcave_livestock", {{"d", 2.5807}, {"L", 20}, {"c", 0.02}}, Case::C2},
      {"fig7_nonconcave", {{"a", 4.2}}, Case::C2},
      {"order_example", {{"b", 0}}, Case::C2},
      {"quadratic_shift", {{"delta", 0}}, Case::A},
      {"quadratic_shift", {{"delta", -2}}, Case::C},
      {"cubic_shift", {{"delta", 0}}, Case::A},
  };
}

std::vector<std::string> classification_invariance(const std::vector<Example>& examples) {
  std::vector<std::string> failures;
  for (const Example& e : examples) {
    const TransitionScenario s = build(e.scenario, e.params);
    ClassifyOptions base = default_options(s);
    base.full_witnesses = false;
    ClassifyOptions tight = base;
    tight.limits.solver.abs_tol /= 10;
    tight.limits.solver.rel_tol /= 10;
    ClassifyOptions longer = base;
    longer.horizon *= 2;
    longer.max_horizon = std::max(longer.max_horizon, 4 * longer.horizon);
    const std::pair<const char*, const ClassifyOptions*> variants[] = {
        {"default", &base}, {"tolerances/10", &tight}, {"horizon*2", &longer}};
    for (const auto& [label, opts] : variants) {
      Case got = Case::Indeterminate;
      std::string err;
      try {
        got = classify(s, *opts).kase;
      } catch (const std::exception& ex) {
        err = ex.what();
      }
      if (got != e.expected) {
        std::ostringstream os;
        os << e.scenario << ' ' << tipcast::io::format_params(e.params) << " [" << label << "]: expected "
           << to_string(e.expected) << ", got " << to_string(got);
        if (!err.empty()) os << " (" << err << ")";
        failures.push_back(os.str());
      }
    }
  }
  return failures;
}

}  // namespace props
