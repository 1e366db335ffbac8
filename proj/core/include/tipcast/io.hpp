#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tipcast/bifurcation.hpp"
#include "tipcast/classifier.hpp"
#include "tipcast/limits.hpp"
#include "tipcast/scenarios.hpp"

namespace tipcast::io {

/// Solver block of a run configuration; unset entries keep the library or
/// scenario defaults.
struct SolverConfig {
  std::optional<double> abs_tol, rel_tol, horizon, max_horizon, escape_bound, max_step, min_step,
      sample_stride, pullback_window, max_window, match_tol, sep_tol, conv_tol, approach_tol,
      exponent_floor;
};

struct BisectConfig {
  std::string param = "d";
  double lo = 0.0;
  double hi = 0.0;
  double tol = 1e-7;
  /// "single" for one critical value, "pair" for a d-concave tipping pair.
  std::string mode = "single";
  int steps = 64;
  bool verify = true;
};

struct SweepConfig {
  std::string param;
  std::vector<double> grid;
};

struct TraceConfig {
  /// Output time range. Defaults to [-100, 100] for trace and [0, 0] for
  /// limits, where only the values at t_from are reported.
  std::optional<double> t_from, t_to;
  double stride = 0.1;
};

struct ReproConfig {
  /// Any of "3", "3_V2", "4". Empty means all.
  std::vector<std::string> tables;
  /// "full" or "spot" (the cells of the acceptance checks).
  std::string subset = "full";
  std::optional<double> bisect_tol;
};

struct OutputConfig {
  /// File for the main record; empty writes to standard output. For trace
  /// this is a directory.
  std::string path;
  std::string format = "csv";
};

struct RunConfig {
  int schema = 1;
  std::variant<std::string, ScenarioDefinition> scenario;
  ParameterMap params;
  SolverConfig solver;
  std::optional<BisectConfig> bisect;
  std::optional<SweepConfig> sweep;
  TraceConfig trace;
  ReproConfig repro;
  OutputConfig output;
};

/// Reads a configuration document. Unknown keys, wrong types and schema
/// mismatches raise ConfigError with the JSON path of the entry.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Applies "a.b.c=value" overrides to a JSON document text. The value is
/// parsed as JSON, falling back to a string.
std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& sets);

TransitionScenario make_scenario(const RunConfig& cfg);
Family make_family(const RunConfig& cfg, const std::string& param);
/// Scenario tuning, then the solver block.
ClassifyOptions make_options(const RunConfig& cfg, const TransitionScenario& s);

/// One reference value of the bifurcation tables.
struct ReferenceEntry {
  std::string table;
  std::string scenario;
  ParameterMap fixed;
  std::string param;
  double reference;
  /// Upper end of the bisection range.
  double search_hi;
  std::string row;
  std::string col;
};

const std::vector<ReferenceEntry>& reference_tables();
/// Entries used by the acceptance spot checks.
bool is_spot_entry(const ReferenceEntry& e);

struct ReproRow {
  ReferenceEntry entry;
  std::optional<CriticalValue> value;
  std::string error;
};

struct ReproSettings {
  std::vector<std::string> tables;
  bool spot_only = false;
  double bisect_tol = 1e-7;
  /// Reference table 4 carries ten decimals, so it is bisected more finely.
  double bisect_tol_table4 = 1e-9;
  std::optional<double> horizon;
  SolverConfig solver;
  int jobs = 1;
};

ReproSettings repro_settings(const RunConfig& cfg, bool fast);
std::vector<ReproRow> run_repro(const ReproSettings& settings);

// Serialization. Numbers carry 17 significant digits; nothing depends on
// wall-clock time.
std::string format_number(double v);
std::string format_params(const ParameterMap& p);

void write_classification_csv(std::ostream& os, const TransitionScenario& s,
                              const Classification& c, const ClassifyOptions& o);
std::string classification_json(const TransitionScenario& s, const Classification& c,
                                const ClassifyOptions& o);

void write_critical_csv(std::ostream& os, const std::vector<CriticalValue>& values,
                        const std::string& result, const ClassifyOptions& o, double tol);
std::string critical_json(const std::vector<CriticalValue>& values, const std::string& result,
                          const ClassifyOptions& o, double tol);

void write_sweep_csv(std::ostream& os, const SweepResult& r);
std::string sweep_json(const SweepResult& r);

void write_limits_csv(std::ostream& os, const std::string& which, const LimitStructure& ls);
std::string limits_json(const std::vector<std::pair<std::string, LimitStructure>>& ls);

void write_repro_csv(std::ostream& os, const std::vector<ReproRow>& rows, const ReproSettings& s);
std::string repro_json(const std::vector<ReproRow>& rows, const ReproSettings& s);

/// Command entry points shared by the CLI and the tests. Each writes its
/// record to cfg.output (or `out` when no path is set), a short summary to
/// `log`, and returns the process exit code: 0 determinate, 2 Indeterminate,
/// 1 error.
struct CommandContext {
  int jobs = 1;
  bool fast = false;
  std::ostream* out = nullptr;
  std::ostream* log = nullptr;
};

int cmd_classify(const RunConfig& cfg, const CommandContext& ctx);
int cmd_bisect(const RunConfig& cfg, const CommandContext& ctx);
int cmd_sweep(const RunConfig& cfg, const CommandContext& ctx);
int cmd_trace(const RunConfig& cfg, const CommandContext& ctx);
int cmd_limits(const RunConfig& cfg, const CommandContext& ctx);
int cmd_repro(const RunConfig& cfg, const CommandContext& ctx);

}  // namespace tipcast::io
