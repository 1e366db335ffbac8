#include "tipcast/io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tipcast/error.hpp"

namespace tipcast::io {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(join(path, k), "unknown key");
  }
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "value must be finite");
  return x;
}

double get_positive(const json& v, const std::string& path) {
  const double x = get_number(v, path);
  if (!(x > 0)) throw ConfigError(path, "must be positive");
  return x;
}

int get_int(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x == std::floor(x) && std::abs(x) < 1e9) return static_cast<int>(x);
  }
  throw ConfigError(path, "expected an integer");
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

void read_optional(const json& obj, const std::string& path, const char* key,
                   std::optional<double>& dst, bool positive = true) {
  if (!obj.contains(key)) return;
  const std::string p = join(path, key);
  dst = positive ? get_positive(obj.at(key), p) : get_number(obj.at(key), p);
}

LimitClass parse_class(const json& v, const std::string& path) {
  const std::string s = get_string(v, path);
  if (s == "concave") return LimitClass::Concave;
  if (s == "dconcave" || s == "d-concave") return LimitClass::DConcave;
  throw ConfigError(path, "expected \"concave\" or \"dconcave\", got \"" + s + "\"");
}

ScenarioDefinition parse_inline(const json& v) {
  const std::string path = "scenario";
  check_keys(v, path, {"name", "class", "g", "g_minus", "g_plus", "tuning"});
  ScenarioDefinition d;
  if (v.contains("name")) d.name = get_string(v.at("name"), "scenario.name");
  if (!v.contains("class")) throw ConfigError("scenario.class", "missing field");
  d.cls = parse_class(v.at("class"), "scenario.class");
  for (auto [key, dst] : {std::pair{"g", &d.g}, std::pair{"g_minus", &d.g_minus},
                          std::pair{"g_plus", &d.g_plus}}) {
    if (v.contains(key)) *dst = get_string(v.at(key), join(path, key));
  }
  if (v.contains("tuning")) {
    const json& t = v.at("tuning");
    const std::string tp = "scenario.tuning";
    check_keys(t, tp, {"match_tol", "approach_tol", "horizon", "escape_bound"});
    read_optional(t, tp, "match_tol", d.tuning.match_tol);
    read_optional(t, tp, "approach_tol", d.tuning.approach_tol);
    read_optional(t, tp, "horizon", d.tuning.horizon);
    read_optional(t, tp, "escape_bound", d.tuning.escape_bound);
  }
  return d;
}

SolverConfig parse_solver(const json& v) {
  const std::string p = "solver";
  check_keys(v, p,
             {"abs_tol", "rel_tol", "horizon", "max_horizon", "escape_bound", "max_step",
              "min_step", "sample_stride", "pullback_window", "max_window", "match_tol", "sep_tol",
              "conv_tol", "approach_tol", "exponent_floor"});
  SolverConfig s;
  read_optional(v, p, "abs_tol", s.abs_tol);
  read_optional(v, p, "rel_tol", s.rel_tol);
  read_optional(v, p, "horizon", s.horizon);
  read_optional(v, p, "max_horizon", s.max_horizon);
  read_optional(v, p, "escape_bound", s.escape_bound);
  read_optional(v, p, "max_step", s.max_step);
  read_optional(v, p, "min_step", s.min_step);
  read_optional(v, p, "sample_stride", s.sample_stride);
  read_optional(v, p, "pullback_window", s.pullback_window);
  read_optional(v, p, "max_window", s.max_window);
  read_optional(v, p, "match_tol", s.match_tol);
  read_optional(v, p, "sep_tol", s.sep_tol);
  read_optional(v, p, "conv_tol", s.conv_tol);
  read_optional(v, p, "approach_tol", s.approach_tol);
  read_optional(v, p, "exponent_floor", s.exponent_floor);
  return s;
}

BisectConfig parse_bisect(const json& v) {
  const std::string p = "bisect";
  check_keys(v, p, {"param", "lo", "hi", "tol", "mode", "steps", "verify"});
  BisectConfig b;
  if (v.contains("param")) b.param = get_string(v.at("param"), "bisect.param");
  if (!v.contains("lo")) throw ConfigError("bisect.lo", "missing field");
  if (!v.contains("hi")) throw ConfigError("bisect.hi", "missing field");
  b.lo = get_number(v.at("lo"), "bisect.lo");
  b.hi = get_number(v.at("hi"), "bisect.hi");
  if (!(b.lo < b.hi)) throw ConfigError("bisect", "need lo < hi");
  if (v.contains("tol")) b.tol = get_positive(v.at("tol"), "bisect.tol");
  if (v.contains("mode")) {
    b.mode = get_string(v.at("mode"), "bisect.mode");
    if (b.mode != "single" && b.mode != "pair") {
      throw ConfigError("bisect.mode", "expected \"single\" or \"pair\"");
    }
  }
  if (v.contains("steps")) {
    b.steps = get_int(v.at("steps"), "bisect.steps");
    if (b.steps < 1) throw ConfigError("bisect.steps", "must be at least 1");
  }
  if (v.contains("verify")) b.verify = get_bool(v.at("verify"), "bisect.verify");
  return b;
}

SweepConfig parse_sweep(const json& v) {
  const std::string p = "sweep";
  check_keys(v, p, {"param", "grid", "from", "to", "step"});
  SweepConfig s;
  if (!v.contains("param")) throw ConfigError("sweep.param", "missing field");
  s.param = get_string(v.at("param"), "sweep.param");
  const bool range = v.contains("from") || v.contains("to") || v.contains("step");
  if (v.contains("grid")) {
    if (range) throw ConfigError("sweep", "give either grid or from/to/step");
    const json& g = v.at("grid");
    if (!g.is_array() || g.empty()) throw ConfigError("sweep.grid", "expected a nonempty array");
    for (std::size_t i = 0; i < g.size(); ++i) {
      s.grid.push_back(get_number(g[i], "sweep.grid." + std::to_string(i)));
    }
    return s;
  }
  for (const char* k : {"from", "to", "step"}) {
    if (!v.contains(k)) throw ConfigError(join(p, k), "missing field");
  }
  const double from = get_number(v.at("from"), "sweep.from");
  const double to = get_number(v.at("to"), "sweep.to");
  const double step = get_positive(v.at("step"), "sweep.step");
  if (to < from) throw ConfigError("sweep", "need from <= to");
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
  if (n > 1000000) throw ConfigError("sweep", "grid has more than a million points");
  for (long i = 0; i <= n; ++i) s.grid.push_back(from + static_cast<double>(i) * step);
  return s;
}

TraceConfig parse_trace(const json& v) {
  const std::string p = "trace";
  check_keys(v, p, {"from", "to", "stride"});
  TraceConfig t;
  read_optional(v, p, "from", t.t_from, false);
  read_optional(v, p, "to", t.t_to, false);
  if (v.contains("stride")) t.stride = get_positive(v.at("stride"), "trace.stride");
  if (t.t_from && t.t_to && *t.t_to < *t.t_from) throw ConfigError("trace", "need from <= to");
  return t;
}

ReproConfig parse_repro(const json& v) {
  const std::string p = "repro";
  check_keys(v, p, {"tables", "subset", "bisect_tol"});
  ReproConfig r;
  if (v.contains("tables")) {
    const json& t = v.at("tables");
    if (!t.is_array()) throw ConfigError("repro.tables", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string path = "repro.tables." + std::to_string(i);
      std::string name = t[i].is_number_integer() ? std::to_string(t[i].get<int>())
                                                  : get_string(t[i], path);
      if (name != "3" && name != "3_V2" && name != "4") {
        throw ConfigError(path, "unknown table \"" + name + "\" (expected 3, 3_V2 or 4)");
      }
      r.tables.push_back(std::move(name));
    }
  }
  if (v.contains("subset")) {
    r.subset = get_string(v.at("subset"), "repro.subset");
    if (r.subset != "full" && r.subset != "spot") {
      throw ConfigError("repro.subset", "expected \"full\" or \"spot\"");
    }
  }
  read_optional(v, p, "bisect_tol", r.bisect_tol);
  return r;
}

OutputConfig parse_output(const json& v) {
  check_keys(v, "output", {"path", "format"});
  OutputConfig o;
  if (v.contains("path")) o.path = get_string(v.at("path"), "output.path");
  if (v.contains("format")) {
    o.format = get_string(v.at("format"), "output.format");
    if (o.format != "csv" && o.format != "json") {
      throw ConfigError("output.format", "expected \"csv\" or \"json\"");
    }
  }
  return o;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  check_keys(doc, "",
             {"schema", "scenario", "params", "solver", "bisect", "sweep", "trace", "repro",
              "output"});
  RunConfig cfg;
  if (!doc.contains("schema")) throw ConfigError("schema", "missing field");
  cfg.schema = get_int(doc.at("schema"), "schema");
  if (cfg.schema != 1) {
    throw ConfigError("schema", "unsupported version " + std::to_string(cfg.schema) +
                                    " (this build reads version 1)");
  }
  if (doc.contains("scenario")) {
    const json& s = doc.at("scenario");
    if (s.is_string()) {
      cfg.scenario = s.get<std::string>();
    } else if (s.is_object()) {
      cfg.scenario = parse_inline(s);
    } else {
      throw ConfigError("scenario", "expected a name or an inline definition");
    }
  }
  if (doc.contains("params")) {
    const json& p = doc.at("params");
    if (!p.is_object()) throw ConfigError("params", "expected an object");
    for (const auto& [k, v] : p.items()) cfg.params[k] = get_number(v, "params." + k);
  }
  if (doc.contains("solver")) cfg.solver = parse_solver(doc.at("solver"));
  if (doc.contains("bisect")) cfg.bisect = parse_bisect(doc.at("bisect"));
  if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc.at("sweep"));
  if (doc.contains("trace")) cfg.trace = parse_trace(doc.at("trace"));
  if (doc.contains("repro")) cfg.repro = parse_repro(doc.at("repro"));
  if (doc.contains("output")) cfg.output = parse_output(doc.at("output"));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& sets) {
  if (sets.empty()) return json_text;
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const ojson::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  for (const std::string& item : sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("", "override \"" + item + "\" is not of the form key=value");
    }
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    ojson value;
    try {
      value = ojson::parse(text);
    } catch (const ojson::parse_error&) {
      value = text;
    }
    ojson* node = &doc;
    std::string path;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError(key, "empty path component in override");
      path = join(path, part);
      if (!node->is_object()) throw ConfigError(path, "override target is not an object");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      if (!node->contains(part)) (*node)[part] = ojson::object();
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return doc.dump();
}

TransitionScenario make_scenario(const RunConfig& cfg) {
  if (const auto* name = std::get_if<std::string>(&cfg.scenario)) {
    if (name->empty()) throw ConfigError("scenario", "missing field");
    return build(*name, cfg.params);
  }
  ScenarioDefinition d = std::get<ScenarioDefinition>(cfg.scenario);
  d.params = cfg.params;
  return build(d);
}

Family make_family(const RunConfig& cfg, const std::string& param) {
  if (const auto* name = std::get_if<std::string>(&cfg.scenario)) {
    if (name->empty()) throw ConfigError("scenario", "missing field");
    const CatalogEntry* e = find_scenario(*name);
    if (!e) throw ConfigError("scenario", "unknown scenario '" + *name + "'");
    const bool known = std::any_of(e->params.begin(), e->params.end(),
                                   [&](const ParamSpec& p) { return p.name == param; });
    if (!known) {
      throw ConfigError("bisect.param",
                        "scenario '" + *name + "' has no parameter '" + param + "'");
    }
    return family(*name, cfg.params, param);
  }
  ScenarioDefinition d = std::get<ScenarioDefinition>(cfg.scenario);
  d.params = cfg.params;
  return family(std::move(d), param);
}

namespace {

void apply_solver(ClassifyOptions& o, const SolverConfig& c) {
  SolverOptions& so = o.limits.solver;
  if (c.abs_tol) so.abs_tol = *c.abs_tol;
  if (c.rel_tol) so.rel_tol = *c.rel_tol;
  if (c.escape_bound) so.escape_bound = *c.escape_bound;
  if (c.max_step) so.max_step = *c.max_step;
  if (c.min_step) so.min_step = *c.min_step;
  if (c.sample_stride) so.sample_stride = *c.sample_stride;
  if (c.horizon) {
    o.horizon = *c.horizon;
    o.max_horizon = std::max(o.max_horizon, 4 * o.horizon);
  }
  if (c.max_horizon) o.max_horizon = *c.max_horizon;
  if (c.pullback_window) o.limits.initial_window = *c.pullback_window;
  if (c.max_window) o.limits.max_window = *c.max_window;
  if (c.match_tol) o.match_tol = *c.match_tol;
  if (c.sep_tol) o.limits.sep_tol = *c.sep_tol;
  if (c.conv_tol) o.limits.conv_tol = *c.conv_tol;
  if (c.approach_tol) o.approach_tol = *c.approach_tol;
  if (c.exponent_floor) o.limits.exponent_floor = *c.exponent_floor;
}

constexpr double kFastHorizon = 2e3;
constexpr double kFastBisectTol = 1e-4;

}  // namespace

ClassifyOptions make_options(const RunConfig& cfg, const TransitionScenario& s) {
  ClassifyOptions o = default_options(s);
  apply_solver(o, cfg.solver);
  return o;
}

const std::vector<ReferenceEntry>& reference_tables() {
  static const std::vector<ReferenceEntry> entries = [] {
    std::vector<ReferenceEntry> v;
    const double ls[] = {1, 5, 10, 15, 20};
    const double ps[] = {0, 2, 5};
    const double t3[5][3] = {{40.2455300, 42.2034404, 41.9617506},
                             {23.0532048, 22.9017928, 22.8172667},
                             {20.5947898, 20.5342198, 20.4768856},
                             {19.9425668, 19.9151819, 19.8875532},
                             {19.6805426, 19.6731947, 19.6649049}};
    const double t3v2[5][3] = {{34.1938684, 36.9449750, 35.7506039},
                               {18.8506812, 18.6486286, 18.6059557},
                               {16.4930418, 16.4318568, 16.3869395},
                               {15.8700118, 15.8460071, 15.8202938},
                               {15.6203137, 15.6150934, 15.6065018}};
    auto label = [](const char* name, double x) {
      std::ostringstream os;
      os << name << '=' << x;
      return os.str();
    };
    for (const char* table : {"3", "3_V2"}) {
      const bool v2 = std::string(table) == "3_V2";
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 3; ++j) {
          v.push_back({table, v2 ? "concave_pred_migration" : "concave_pred",
                       {{"rho", 1.0}, {"L", ls[i]}, {"p", ps[j]}}, "d",
                       v2 ? t3v2[i][j] : t3[i][j], 50.0, label("L", ls[i]), label("p", ps[j])});
        }
      }
    }
    const double l4[] = {2, 10, 20, 30, 40};
    const double cs[] = {0.01, 0.02, 0.03};
    const double t4[5][3] = {{9.5918417988, 7.8400146619, 6.6406325271},
                             {3.5156887400, 3.1640725896, 2.9522195572},
                             {2.7559336044, 2.5806400722, 2.4622290038},
                             {2.4757094854, 2.3677420953, 2.3132184604},
                             {2.3543746813, 2.2850546293, 2.2459305139}};
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) {
        v.push_back({"4", "dconcave_livestock", {{"L", l4[i]}, {"c", cs[j]}}, "d", t4[i][j], 20.0,
                     label("L", l4[i]), label("c", cs[j])});
      }
    }
    return v;
  }();
  return entries;
}

bool is_spot_entry(const ReferenceEntry& e) {
  if (e.table == "3") return e.col == "p=0" && (e.row == "L=1" || e.row == "L=10" || e.row == "L=20");
  if (e.table == "3_V2") return e.col == "p=0" && e.row == "L=10";
  if (e.table == "4") {
    return (e.row == "L=2" && e.col == "c=0.01") || (e.row == "L=20" && e.col == "c=0.02");
  }
  return false;
}

ReproSettings repro_settings(const RunConfig& cfg, bool fast) {
  ReproSettings s;
  s.tables = cfg.repro.tables;
  s.spot_only = cfg.repro.subset == "spot";
  s.solver = cfg.solver;
  if (fast) {
    s.bisect_tol = s.bisect_tol_table4 = cfg.repro.bisect_tol.value_or(kFastBisectTol);
    s.horizon = cfg.solver.horizon.value_or(kFastHorizon);
  } else {
    if (cfg.repro.bisect_tol) s.bisect_tol = s.bisect_tol_table4 = *cfg.repro.bisect_tol;
    s.horizon = cfg.solver.horizon;
  }
  return s;
}

std::vector<ReproRow> run_repro(const ReproSettings& settings) {
  std::vector<ReproRow> rows;
  for (const auto& e : reference_tables()) {
    if (!settings.tables.empty() &&
        std::find(settings.tables.begin(), settings.tables.end(), e.table) ==
            settings.tables.end()) {
      continue;
    }
    if (settings.spot_only && !is_spot_entry(e)) continue;
    rows.push_back({e, std::nullopt, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      ReproRow& row = rows[i];
      try {
        const Family fam = family(row.entry.scenario, row.entry.fixed, row.entry.param);
        ClassifyOptions o = default_options(fam(0.0));
        apply_solver(o, settings.solver);
        if (settings.horizon) {
          o.horizon = *settings.horizon;
          o.max_horizon = std::max(4 * o.horizon, settings.solver.max_horizon.value_or(0.0));
        }
        BisectOptions b;
        b.tol = row.entry.table == "4" ? settings.bisect_tol_table4 : settings.bisect_tol;
        row.value = bisect(fam, row.entry.param, 0.0, row.entry.search_hi, o, b);
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(settings.jobs, static_cast<int>(rows.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

// Serialization.

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_params(const ParameterMap& p) {
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += ';';
    out += k + '=' + format_number(v);
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::string opt_bool(const std::optional<bool>& v) {
  if (!v) return "";
  return *v ? "true" : "false";
}

ojson json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ojson json_opt(const std::optional<double>& v) { return v ? json_number(*v) : ojson(nullptr); }

ojson json_opt(const std::optional<bool>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson params_json(const ParameterMap& p) {
  ojson o = ojson::object();
  for (const auto& [k, v] : p) o[k] = json_number(v);
  return o;
}

std::string witnesses_text(const Classification& c) {
  std::string out;
  for (const auto& w : c.witnesses) {
    if (!out.empty()) out += ';';
    out += w.solution + "~" + w.target + ":" + format_number(w.distance);
  }
  return out;
}

const char* ghost_name(GhostSide g) {
  switch (g) {
    case GhostSide::Below: return "below";
    case GhostSide::Above: return "above";
    case GhostSide::None: break;
  }
  return "";
}

std::vector<std::string> roles(const LimitStructure& ls) {
  if (ls.shape == LimitShape::Empty) return {};
  if (ls.shape == LimitShape::Collapsed) return {"attractor"};
  if (ls.cls == LimitClass::Concave) return {"r", "a"};
  return {"l", "m", "u"};
}

std::string case_label(const Classification& c) { return to_string(c.kase); }

}  // namespace

void write_classification_csv(std::ostream& os, const TransitionScenario& s,
                              const Classification& c, const ClassifyOptions& o) {
  os << "scenario,params,case,tag,horizon,abs_tol,rel_tol,match_tol,escape_time,"
        "min_separation,m_g_bounded,witnesses\n";
  os << csv_field(s.name) << ',' << csv_field(format_params(s.params)) << ',' << case_label(c)
     << ',' << csv_field(c.tag) << ',' << format_number(c.horizon) << ','
     << format_number(o.limits.solver.abs_tol) << ',' << format_number(o.limits.solver.rel_tol)
     << ',' << format_number(o.match_tol) << ',' << opt_number(c.escape_time) << ','
     << opt_number(c.min_separation) << ',' << opt_bool(c.m_g_bounded) << ','
     << csv_field(witnesses_text(c)) << '\n';
}

std::string classification_json(const TransitionScenario& s, const Classification& c,
                                const ClassifyOptions& o) {
  ojson j;
  j["scenario"] = s.name;
  j["params"] = params_json(s.params);
  j["case"] = case_label(c);
  j["tag"] = c.tag;
  j["horizon"] = json_number(c.horizon);
  j["abs_tol"] = o.limits.solver.abs_tol;
  j["rel_tol"] = o.limits.solver.rel_tol;
  j["match_tol"] = o.match_tol;
  j["escape_time"] = json_opt(c.escape_time);
  j["min_separation"] = json_opt(c.min_separation);
  j["m_g_bounded"] = json_opt(c.m_g_bounded);
  ojson w = ojson::array();
  for (const auto& x : c.witnesses) {
    w.push_back({{"solution", x.solution}, {"target", x.target}, {"distance", json_number(x.distance)}});
  }
  j["witnesses"] = w;
  return j.dump(2) + "\n";
}

void write_critical_csv(std::ostream& os, const std::vector<CriticalValue>& values,
                        const std::string& result, const ClassifyOptions& o, double tol) {
  os << "result,param,lo,hi,mid,width,case_lo,case_hi,kind,iterations,verified,"
        "indeterminate_lo,indeterminate_hi,tol,horizon,abs_tol,rel_tol,warnings\n";
  for (const auto& v : values) {
    std::string warn;
    for (const auto& w : v.warnings) warn += (warn.empty() ? "" : "; ") + w;
    os << result << ',' << csv_field(v.param) << ',' << format_number(v.lo) << ','
       << format_number(v.hi) << ',' << format_number(v.mid()) << ','
       << format_number(v.width()) << ',' << case_label(v.case_lo) << ','
       << case_label(v.case_hi) << ',' << v.kind << ',' << v.iterations << ','
       << opt_bool(v.verified) << ','
       << (v.indeterminate_band ? format_number(v.indeterminate_band->first) : "") << ','
       << (v.indeterminate_band ? format_number(v.indeterminate_band->second) : "") << ','
       << format_number(tol) << ',' << format_number(o.horizon) << ','
       << format_number(o.limits.solver.abs_tol) << ','
       << format_number(o.limits.solver.rel_tol) << ',' << csv_field(warn) << '\n';
  }
}

std::string critical_json(const std::vector<CriticalValue>& values, const std::string& result,
                          const ClassifyOptions& o, double tol) {
  ojson j;
  j["result"] = result;
  j["tol"] = tol;
  j["horizon"] = o.horizon;
  j["abs_tol"] = o.limits.solver.abs_tol;
  j["rel_tol"] = o.limits.solver.rel_tol;
  ojson arr = ojson::array();
  for (const auto& v : values) {
    ojson e;
    e["param"] = v.param;
    e["lo"] = v.lo;
    e["hi"] = v.hi;
    e["mid"] = v.mid();
    e["width"] = v.width();
    e["case_lo"] = case_label(v.case_lo);
    e["case_hi"] = case_label(v.case_hi);
    e["kind"] = v.kind;
    e["iterations"] = v.iterations;
    e["verified"] = json_opt(v.verified);
    e["indeterminate_band"] =
        v.indeterminate_band
            ? ojson::array({v.indeterminate_band->first, v.indeterminate_band->second})
            : ojson(nullptr);
    e["warnings"] = v.warnings;
    arr.push_back(std::move(e));
  }
  j["values"] = std::move(arr);
  return j.dump(2) + "\n";
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "param,value,case,escape_time,min_separation,m_g_bounded,tag,error\n";
  for (const auto& p : r.points) {
    os << csv_field(r.param) << ',' << format_number(p.value) << ',' << to_string(p.kase())
       << ',' << (p.result ? opt_number(p.result->escape_time) : "") << ','
       << (p.result ? opt_number(p.result->min_separation) : "") << ','
       << (p.result ? opt_bool(p.result->m_g_bounded) : "") << ','
       << csv_field(p.result ? p.result->tag : "") << ',' << csv_field(p.error) << '\n';
  }
}

std::string sweep_json(const SweepResult& r) {
  ojson j;
  j["param"] = r.param;
  ojson pts = ojson::array();
  for (const auto& p : r.points) {
    ojson e;
    e["value"] = p.value;
    e["case"] = to_string(p.kase());
    e["escape_time"] = p.result ? json_opt(p.result->escape_time) : ojson(nullptr);
    e["min_separation"] = p.result ? json_opt(p.result->min_separation) : ojson(nullptr);
    e["m_g_bounded"] = p.result ? json_opt(p.result->m_g_bounded) : ojson(nullptr);
    e["tag"] = p.result ? p.result->tag : "";
    e["error"] = p.error;
    pts.push_back(std::move(e));
  }
  j["points"] = std::move(pts);
  j["changes"] = r.changes;
  return j.dump(2) + "\n";
}

void write_limits_csv(std::ostream& os, const std::string& which, const LimitStructure& ls) {
  const double t = ls.window.t_a;
  const auto names = roles(ls);
  if (names.empty()) {
    os << which << ',' << to_string(ls.shape) << ",,,,,,,,,,,\n";
    return;
  }
  for (std::size_t i = 0; i < ls.solutions.size(); ++i) {
    const HyperbolicEstimate& h = ls.solutions[i];
    os << which << ',' << to_string(ls.shape) << ',' << ghost_name(ls.ghost) << ',' << names[i]
       << ',' << format_number(t) << ',' << format_number(h.value_at(t)) << ','
       << format_number(h.exponent) << ',' << to_string(h.stability) << ','
       << format_number(h.converged) << ',' << format_number(h.window) << ','
       << (h.hyperbolic ? "true" : "false") << ',' << format_number(ls.bracket.lo) << ','
       << format_number(ls.bracket.hi) << '\n';
  }
}

std::string limits_json(const std::vector<std::pair<std::string, LimitStructure>>& ls) {
  ojson arr = ojson::array();
  for (const auto& [which, s] : ls) {
    ojson e;
    e["which"] = which;
    e["class"] = to_string(s.cls);
    e["shape"] = to_string(s.shape);
    e["ghost"] = ghost_name(s.ghost);
    e["window"] = ojson::array({s.window.t_a, s.window.t_b});
    e["bracket"] = ojson::array({s.bracket.lo, s.bracket.hi});
    e["min_gap"] = json_number(s.min_gap);
    const auto names = roles(s);
    ojson sols = ojson::array();
    for (std::size_t i = 0; i < s.solutions.size(); ++i) {
      const HyperbolicEstimate& h = s.solutions[i];
      sols.push_back({{"role", names[i]},
                      {"t", s.window.t_a},
                      {"value", json_number(h.value_at(s.window.t_a))},
                      {"exponent", json_number(h.exponent)},
                      {"stability", to_string(h.stability)},
                      {"converged", json_number(h.converged)},
                      {"window", json_number(h.window)},
                      {"hyperbolic", h.hyperbolic}});
    }
    e["solutions"] = std::move(sols);
    arr.push_back(std::move(e));
  }
  return ojson{{"limits", std::move(arr)}}.dump(2) + "\n";
}

void write_repro_csv(std::ostream& os, const std::vector<ReproRow>& rows, const ReproSettings& s) {
  os << "table,row,col,scenario,param,reference,lo,hi,mid,abs_error,case_lo,case_hi,iterations,"
        "verified,horizon,bisect_tol,error\n";
  for (const auto& r : rows) {
    const double tol = r.entry.table == "4" ? s.bisect_tol_table4 : s.bisect_tol;
    os << r.entry.table << ',' << r.entry.row << ',' << r.entry.col << ',' << r.entry.scenario
       << ',' << r.entry.param << ',' << format_number(r.entry.reference) << ',';
    if (r.value) {
      const CriticalValue& v = *r.value;
      os << format_number(v.lo) << ',' << format_number(v.hi) << ',' << format_number(v.mid())
         << ',' << format_number(std::abs(v.mid() - r.entry.reference)) << ','
         << case_label(v.case_lo) << ',' << case_label(v.case_hi) << ',' << v.iterations << ','
         << opt_bool(v.verified) << ',' << format_number(v.case_lo.horizon) << ',';
    } else {
      os << ",,,,,,,,,";
    }
    os << format_number(tol) << ',' << csv_field(r.error) << '\n';
  }
}

std::string repro_json(const std::vector<ReproRow>& rows, const ReproSettings& s) {
  ojson arr = ojson::array();
  for (const auto& r : rows) {
    ojson e;
    e["table"] = r.entry.table;
    e["row"] = r.entry.row;
    e["col"] = r.entry.col;
    e["scenario"] = r.entry.scenario;
    e["param"] = r.entry.param;
    e["reference"] = r.entry.reference;
    if (r.value) {
      const CriticalValue& v = *r.value;
      e["lo"] = v.lo;
      e["hi"] = v.hi;
      e["mid"] = v.mid();
      e["abs_error"] = std::abs(v.mid() - r.entry.reference);
      e["case_lo"] = case_label(v.case_lo);
      e["case_hi"] = case_label(v.case_hi);
      e["iterations"] = v.iterations;
      e["verified"] = json_opt(v.verified);
      e["horizon"] = v.case_lo.horizon;
    }
    e["bisect_tol"] = r.entry.table == "4" ? s.bisect_tol_table4 : s.bisect_tol;
    e["error"] = r.error;
    arr.push_back(std::move(e));
  }
  return ojson{{"rows", std::move(arr)}}.dump(2) + "\n";
}

// Commands.

namespace {

std::ostream& log_of(const CommandContext& ctx) {
  static std::ostringstream sink;
  if (ctx.log) return *ctx.log;
  sink.str("");
  return sink;
}

int guarded(const CommandContext& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    log_of(ctx) << "error: " << e.what() << '\n';
    return 1;
  }
}

bool use_json(const RunConfig& cfg) { return cfg.output.format == "json"; }

// Writes the record to the configured file, or to ctx.out.
void emit(const RunConfig& cfg, const CommandContext& ctx,
          const std::function<void(std::ostream&)>& write) {
  if (!cfg.output.path.empty()) {
    std::ofstream f(cfg.output.path, std::ios::binary);
    if (!f) throw ConfigError("output.path", "cannot write " + cfg.output.path);
    write(f);
    if (!f) throw ConfigError("output.path", "write failed for " + cfg.output.path);
    return;
  }
  if (ctx.out) write(*ctx.out);
}

ClassifyOptions command_options(const RunConfig& cfg, const TransitionScenario& s,
                                const CommandContext& ctx) {
  ClassifyOptions o = make_options(cfg, s);
  if (ctx.fast && !cfg.solver.horizon) {
    o.horizon = kFastHorizon;
    o.max_horizon = std::max(4 * o.horizon, cfg.solver.max_horizon.value_or(0.0));
  }
  return o;
}

std::string describe(const CriticalValue& v) {
  std::ostringstream os;
  os.precision(12);
  os << v.param << " in [" << v.lo << ", " << v.hi << "] " << to_string(v.case_lo.kase) << "|"
     << to_string(v.case_hi.kase) << " after " << v.iterations << " iterations";
  return os.str();
}

}  // namespace

int cmd_classify(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const TransitionScenario s = make_scenario(cfg);
    const ClassifyOptions o = command_options(cfg, s, ctx);
    const Classification c = classify_robust(s, o);
    auto& log = log_of(ctx);
    log << "case " << to_string(c.kase);
    if (!c.tag.empty()) log << " (" << c.tag << ")";
    log << '\n';
    for (const auto& w : c.witnesses) {
      log << "  " << w.solution << " ~ " << w.target << ": " << format_number(w.distance) << '\n';
    }
    if (c.escape_time) log << "  escape at t = " << format_number(*c.escape_time) << '\n';
    emit(cfg, ctx, [&](std::ostream& os) {
      if (use_json(cfg)) {
        os << classification_json(s, c, o);
      } else {
        write_classification_csv(os, s, c, o);
      }
    });
    return c.determinate() ? 0 : 2;
  });
}

int cmd_bisect(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    if (!cfg.bisect) throw ConfigError("bisect", "missing block");
    const BisectConfig& bc = *cfg.bisect;
    const Family fam = make_family(cfg, bc.param);
    const ClassifyOptions o = command_options(cfg, fam(bc.lo), ctx);
    BisectOptions bo;
    bo.tol = ctx.fast ? std::max(bc.tol, kFastBisectTol) : bc.tol;
    bo.verify = bc.verify;
    auto& log = log_of(ctx);

    std::vector<CriticalValue> values;
    std::string result = "single";
    int code = 0;
    if (bc.mode == "single") {
      values.push_back(bisect(fam, bc.param, bc.lo, bc.hi, o, bo));
      log << describe(values.back()) << '\n';
    } else {
      PairOptions po;
      po.steps = bc.steps;
      po.jobs = ctx.jobs;
      po.bisect = bo;
      PairResult pr = find_tipping_pair(fam, bc.param, bc.lo, bc.hi, o, po);
      result = to_string(pr.kind);
      values = pr.edges;
      log << "tipping pair: " << result << '\n';
      for (const auto& v : values) log << "  " << describe(v) << '\n';
      if (pr.kind == PairKind::Unresolved) {
        CriticalValue u;
        u.param = bc.param;
        u.lo = pr.unresolved->first;
        u.hi = pr.unresolved->second;
        u.case_lo.kase = Case::C2;
        u.case_hi.kase = Case::C1;
        u.kind = "C2<->C1";
        u.warnings.push_back("no Case A value resolved between C2 and C1");
        values.push_back(u);
        log << "  C2|C1 bracket [" << format_number(u.lo) << ", " << format_number(u.hi)
            << "] without a resolvable Case A interval\n";
        code = 2;
      } else if (pr.kind == PairKind::NoneFound) {
        log << "  no Case A boundary in range";
        if (pr.uniform) log << " (all " << to_string(*pr.uniform) << ")";
        log << '\n';
      }
    }
    emit(cfg, ctx, [&](std::ostream& os) {
      if (use_json(cfg)) {
        os << critical_json(values, result, o, bo.tol);
      } else {
        write_critical_csv(os, values, result, o, bo.tol);
      }
    });
    return code;
  });
}

int cmd_sweep(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    if (!cfg.sweep) throw ConfigError("sweep", "missing block");
    const SweepConfig& sc = *cfg.sweep;
    const Family fam = make_family(cfg, sc.param);
    const ClassifyOptions o = command_options(cfg, fam(sc.grid.front()), ctx);
    const SweepResult r = sweep(fam, sc.param, sc.grid, o, ctx.jobs);
    auto& log = log_of(ctx);
    int code = 0;
    for (const auto& p : r.points) {
      if (!p.error.empty()) {
        code = 1;
        log << "error at " << sc.param << " = " << format_number(p.value) << ": " << p.error
            << '\n';
      } else if (p.kase() == Case::Indeterminate && code == 0) {
        code = 2;
      }
    }
    log << r.points.size() << " points, " << r.changes.size() << " case changes\n";
    for (std::size_t i : r.changes) {
      log << "  " << to_string(r.points[i].kase()) << " -> " << to_string(r.points[i + 1].kase())
          << " between " << format_number(r.points[i].value) << " and "
          << format_number(r.points[i + 1].value) << '\n';
    }
    emit(cfg, ctx, [&](std::ostream& os) {
      if (use_json(cfg)) {
        os << sweep_json(r);
      } else {
        write_sweep_csv(os, r);
      }
    });
    return code;
  });
}

int cmd_limits(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const TransitionScenario s = make_scenario(cfg);
    const ClassifyOptions o = command_options(cfg, s, ctx);
    const double t_a = cfg.trace.t_from.value_or(0.0);
    const double t_b = std::max(t_a, cfg.trace.t_to.value_or(t_a));
    LimitOptions lo = o.limits;
    lo.allow_degenerate = true;
    std::vector<std::pair<std::string, LimitStructure>> all;
    all.emplace_back("g_minus", limit_structure(s.g_minus, s.cls, {t_a, t_b}, lo));
    all.emplace_back("g_plus", limit_structure(s.g_plus, s.cls, {t_a, t_b}, lo));
    auto& log = log_of(ctx);
    for (const auto& [which, ls] : all) {
      const auto names = roles(ls);
      log << which << ": " << to_string(ls.shape);
      for (std::size_t i = 0; i < ls.solutions.size(); ++i) {
        log << "  " << names[i] << "(" << format_number(t_a)
            << ") = " << format_number(ls.solutions[i].value_at(t_a))
            << " exponent " << format_number(ls.solutions[i].exponent);
      }
      log << '\n';
    }
    emit(cfg, ctx, [&](std::ostream& os) {
      if (use_json(cfg)) {
        os << limits_json(all);
      } else {
        os << "which,shape,ghost,role,t,value,exponent,stability,converged,window,hyperbolic,"
              "bracket_lo,bracket_hi\n";
        for (const auto& [which, ls] : all) write_limits_csv(os, which, ls);
      }
    });
    return 0;
  });
}

namespace {

std::vector<double> time_grid(double from, double to, double stride) {
  const auto n = static_cast<long>(std::floor((to - from) / stride + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) {
    const double t = from + static_cast<double>(i) * stride;
    out.push_back(std::round(t * 1e9) / 1e9);
  }
  return out;
}

// Grid times are printed in shortest round-trip form so that 0.1 steps stay
// readable.
std::string format_time(double t) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, r.ptr);
}

using Column = std::pair<std::string, std::function<std::optional<double>(double)>>;

void write_table(const std::filesystem::path& file, bool as_json, const std::vector<double>& ts,
                 const std::vector<Column>& cols) {
  std::ofstream f(file, std::ios::binary);
  if (!f) throw ConfigError("output.path", "cannot write " + file.string());
  if (as_json) {
    ojson j;
    j["t"] = ts;
    for (const auto& [name, fn] : cols) {
      ojson col = ojson::array();
      for (double t : ts) col.push_back(json_opt(fn(t)));
      j[name] = std::move(col);
    }
    f << j.dump() << '\n';
    return;
  }
  f << 't';
  for (const auto& c : cols) f << ',' << c.first;
  f << '\n';
  for (double t : ts) {
    f << format_time(t);
    for (const auto& c : cols) f << ',' << opt_number(c.second(t));
    f << '\n';
  }
}

std::function<std::optional<double>(double)> sampler(const Trajectory& tr) {
  return [&tr](double t) -> std::optional<double> {
    if (tr.samples().empty() || !tr.covers(t)) return std::nullopt;
    return tr.value_at(t);
  };
}

}  // namespace

int cmd_trace(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const TransitionScenario s = make_scenario(cfg);
    ClassifyOptions o = command_options(cfg, s, ctx);
    o.keep_full_trajectories = true;
    o.full_witnesses = true;
    const double from = cfg.trace.t_from.value_or(-100.0);
    const double to = cfg.trace.t_to.value_or(100.0);
    if (to < from) throw ConfigError("trace", "need from <= to");
    const Classification c = classify_robust(s, o);

    LimitOptions lo = o.limits;
    lo.allow_degenerate = true;
    const LimitStructure past = limit_structure(s.g_minus, s.cls, {from, to}, lo);
    const LimitStructure future = limit_structure(s.g_plus, s.cls, {from, to}, lo);

    const std::filesystem::path dir = cfg.output.path.empty() ? "trace" : cfg.output.path;
    std::filesystem::create_directories(dir);
    const bool as_json = use_json(cfg);
    const std::string ext = as_json ? ".json" : ".csv";
    const std::vector<double> ts = time_grid(from, to, cfg.trace.stride);

    ojson files = ojson::array();
    for (const auto& [name, tr] : c.solutions) {
      write_table(dir / (name + ext), as_json, ts, {{"x", sampler(tr)}});
      files.push_back({{"name", name}, {"path", name + ext}, {"kind", "solution"}, {"columns", {"t", "x"}}});
    }
    std::vector<Column> cols;
    for (const auto* ls : {&past, &future}) {
      const auto names = roles(*ls);
      const std::string suffix = ls == &past ? "_minus" : "_plus";
      for (std::size_t i = 0; i < ls->solutions.size(); ++i) {
        cols.emplace_back(names[i] + suffix, sampler(ls->solutions[i].traj));
      }
    }
    write_table(dir / ("limits" + ext), as_json, ts, cols);
    ojson limit_cols = ojson::array({"t"});
    for (const auto& col : cols) limit_cols.push_back(col.first);
    files.push_back({{"name", "limits"}, {"path", "limits" + ext}, {"kind", "limits"}, {"columns", limit_cols}});

    ojson manifest;
    manifest["schema"] = 1;
    manifest["scenario"] = s.name;
    manifest["params"] = params_json(s.params);
    manifest["case"] = to_string(c.kase);
    manifest["from"] = from;
    manifest["to"] = to;
    manifest["stride"] = cfg.trace.stride;
    manifest["files"] = std::move(files);
    std::ofstream mf(dir / "manifest.json", std::ios::binary);
    if (!mf) throw ConfigError("output.path", "cannot write manifest in " + dir.string());
    mf << manifest.dump(2) << '\n';

    log_of(ctx) << "case " << to_string(c.kase) << "; " << c.solutions.size() + 1
                << " tables written to " << dir.string() << '\n';
    return c.determinate() ? 0 : 2;
  });
}

int cmd_repro(const RunConfig& cfg, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    ReproSettings st = repro_settings(cfg, ctx.fast);
    st.jobs = ctx.jobs;
    const std::vector<ReproRow> rows = run_repro(st);
    auto& log = log_of(ctx);
    int code = 0;
    for (const auto& r : rows) {
      log << "table " << r.entry.table << ' ' << r.entry.row << ' ' << r.entry.col << ": ";
      if (r.value) {
        log << format_number(r.value->mid()) << " (reference " << format_number(r.entry.reference)
            << ", diff " << format_number(r.value->mid() - r.entry.reference) << ")\n";
      } else {
        log << "error: " << r.error << '\n';
        code = 1;
      }
    }
    emit(cfg, ctx, [&](std::ostream& os) {
      if (use_json(cfg)) {
        os << repro_json(rows, st);
      } else {
        write_repro_csv(os, rows, st);
      }
    });
    return code;
  });
}

}  // namespace tipcast::io
