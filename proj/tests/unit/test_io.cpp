#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "tipcast/error.hpp"
#include "tipcast/io.hpp"

using namespace tipcast;
using namespace tipcast::io;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tipcast_io_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, log;
};

Run run(int (*cmd)(const RunConfig&, const CommandContext&), const std::string& doc,
        const std::vector<std::string>& sets = {}, bool fast = false) {
  std::ostringstream out, log;
  CommandContext ctx;
  ctx.out = &out;
  ctx.log = &log;
  ctx.fast = fast;
  const RunConfig cfg = parse_config(apply_overrides(doc, sets));
  const int code = cmd(cfg, ctx);
  return {code, out.str(), log.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

const char* kPred = R"({"schema": 1, "scenario": "concave_pred",
                        "params": {"d": 25, "rho": 1, "L": 10, "p": 0}})";

}  // namespace

TEST_CASE("config parsing rejects unknown keys with their path") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"schema": 1, "solver": {"abs_tol": 1e-10, "oops": 1}})"),
                       doctest::Contains("solver.oops"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"schema": 1, "extra": 1})"), doctest::Contains("extra"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"scenario": "x"})"), doctest::Contains("schema"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"schema": 2})"), doctest::Contains("schema"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"schema": 1, "solver": {"abs_tol": -1}})"),
                       doctest::Contains("solver.abs_tol"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"schema": 1, "params": {"d": "x"}})"),
                       doctest::Contains("params.d"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"schema": 1, "scenario": {"class": "concave", "g": "x", "bad": 1}})"),
      doctest::Contains("scenario.bad"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "output": {"format": "xml"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "bisect": {"lo": 1, "hi": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema": 1, "repro": {"tables": ["5"]}})"), ConfigError);
}

TEST_CASE("config defaults and solver block") {
  const RunConfig cfg = parse_config(R"({"schema": 1, "scenario": "concave_pred",
      "params": {"d": 20, "rho": 1, "L": 10, "p": 0},
      "solver": {"abs_tol": 1e-10, "horizon": 5000, "pullback_window": 80, "match_tol": 2e-3},
      "sweep": {"param": "p", "from": 0, "to": 5, "step": 0.5}})");
  const TransitionScenario s = make_scenario(cfg);
  const ClassifyOptions o = make_options(cfg, s);
  CHECK(o.limits.solver.abs_tol == 1e-10);
  CHECK(o.limits.solver.rel_tol == 1e-12);
  CHECK(o.horizon == 5000);
  CHECK(o.limits.initial_window == 80);
  CHECK(o.match_tol == 2e-3);
  CHECK(o.limits.sep_tol == 1e-4);
  REQUIRE(cfg.sweep);
  CHECK(cfg.sweep->grid.size() == 11);
  CHECK(cfg.sweep->grid.back() == doctest::Approx(5));

  const RunConfig plain = parse_config(R"({"schema": 1, "scenario": "fig7_nonconcave", "params": {"a": 4.2}})");
  const ClassifyOptions po = make_options(plain, make_scenario(plain));
  CHECK(po.horizon == 1e4);
  CHECK(po.limits.solver.abs_tol == 1e-12);
  CHECK(po.match_tol == 1e-2);
}

TEST_CASE("overrides") {
  const std::string doc = apply_overrides(kPred, {"params.d=20", "solver.horizon=2000",
                                                  "output.format=json", "scenario=concave_pred"});
  const RunConfig cfg = parse_config(doc);
  CHECK(cfg.params.at("d") == 20);
  CHECK(cfg.solver.horizon == 2000);
  CHECK(cfg.output.format == "json");
  CHECK_THROWS_AS(apply_overrides(kPred, {"novalue"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(kPred, {"params.d.x=1"}), ConfigError);
  CHECK_THROWS_AS(parse_config(apply_overrides(kPred, {"solver.bogus=1"})), ConfigError);
}

TEST_CASE("numbers round-trip through 17 significant digits") {
  for (double v : {0.1, 1.0 / 3, 40.2455300, 1e-300, -2.5806400722, 6.02214076e23}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_params({{"b", 2}, {"a", 0.5}}) == "a=0.5;b=2");
}

TEST_CASE("classify reports the case and exit status") {
  const Run r = run(cmd_classify, kPred);
  CHECK(r.code == 0);
  CHECK(r.log.find("case C") == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 2);
  CHECK(split(ls[1])[2] == "C");

  const Run j = run(cmd_classify, R"({"schema": 1, "scenario": "fig7_nonconcave",
      "params": {"a": 4.2}, "output": {"format": "json"}})");
  CHECK(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["case"] == "C2");
  CHECK(doc["witnesses"].size() == 6);
}

TEST_CASE("classify with a contradictory class tag exits 1") {
  const Run r = run(cmd_classify, R"({"schema": 1, "scenario": {"class": "concave",
      "g": "-x^3 + x", "g_minus": "-x^3 + x", "g_plus": "-x^3 + x"}})");
  CHECK(r.code == 1);
  CHECK(r.log.find("ConcavityViolation") != std::string::npos);
  CHECK(r.log.find("g_minus") != std::string::npos);
}

TEST_CASE("classify with a missing scenario field exits 1") {
  const Run r = run(cmd_classify, R"({"schema": 1, "scenario": {"class": "dconcave",
      "g": "-x^3 + x", "g_minus": "-x^3 + x", "g_plus": ""}})");
  CHECK(r.code == 1);
  CHECK(r.log.find("missing field") != std::string::npos);
}

TEST_CASE("indeterminate classification exits 2") {
  // Saddle-node of the autonomous quadratic: no hyperbolic structure.
  const Run r = run(cmd_classify, R"({"schema": 1, "scenario": {"class": "concave",
      "g": "-x^2", "g_minus": "-x^2", "g_plus": "-x^2"}})");
  CHECK(r.code == 2);
  CHECK(split(lines(r.out)[1])[2] == "Indeterminate");
}

TEST_CASE("limits record of the cubic") {
  const Run r = run(cmd_limits, R"({"schema": 1, "scenario": {"class": "dconcave",
      "g": "-x^3 + x", "g_minus": "-x^3 + x", "g_plus": "-x^3 + x"}})");
  CHECK(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 7);
  const double values[] = {-1, 0, 1}, exps[] = {-2, 1, -2};
  for (int i = 0; i < 3; ++i) {
    const auto f = split(ls[1 + i]);
    CHECK(f[0] == "g_minus");
    CHECK(std::abs(std::stod(f[5]) - values[i]) <= 1e-9);
    CHECK(std::abs(std::stod(f[6]) - exps[i]) <= 1e-3);
  }
}

TEST_CASE("sweep of the phase finds at least two case changes") {
  const Run r = run(cmd_sweep, R"({"schema": 1, "scenario": "concave_pred",
      "params": {"d": 42, "rho": 1, "L": 1},
      "sweep": {"param": "p", "from": 0, "to": 5, "step": 0.5}})");
  CHECK(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 12);
  int changes = 0;
  for (std::size_t i = 2; i < ls.size(); ++i) changes += split(ls[i])[2] != split(ls[i - 1])[2];
  CHECK(changes >= 2);
}

TEST_CASE("bisect emits a critical value row") {
  const Run r = run(cmd_bisect, R"({"schema": 1, "scenario": "quadratic_shift",
      "bisect": {"param": "delta", "lo": -2, "hi": 0, "tol": 1e-4}})");
  REQUIRE(r.code == 0);
  const auto f = split(lines(r.out)[1]);
  CHECK(f[0] == "single");
  CHECK(std::abs(std::stod(f[4]) + 1) <= 1e-4);
  CHECK(f[6] == "C");
  CHECK(f[7] == "A");

  const Run bad = run(cmd_bisect, R"({"schema": 1, "scenario": "quadratic_shift",
      "bisect": {"param": "delta", "lo": 0, "hi": 1}})");
  CHECK(bad.code == 1);
  const Run unknown = run(cmd_bisect, R"({"schema": 1, "scenario": "quadratic_shift",
      "bisect": {"param": "d", "lo": 0, "hi": 1}})");
  CHECK(unknown.code == 1);
}

TEST_CASE("trace near the critical amplitude") {
  const auto dir = scratch("trace");
  const Run r = run(cmd_trace, R"({"schema": 1, "scenario": "concave_pred",
      "params": {"d": 20.5947898, "rho": 1, "L": 10, "p": 0},
      "trace": {"from": -20, "to": 20, "stride": 0.5}})",
                    {"output.path=\"" + dir.string() + "\""});
  CHECK(r.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["files"].size() == 3);
  const auto a = lines(slurp(dir / "a_g.csv"));
  const auto rg = lines(slurp(dir / "r_g.csv"));
  const auto lim = lines(slurp(dir / "limits.csv"));
  REQUIRE(a.size() == 82);
  REQUIRE(rg.size() == 82);
  REQUIRE(lim.size() == 82);
  CHECK(lim[0] == "t,r_minus,a_minus,r_plus,a_plus");
  // t = 0 is row 41
  CHECK(split(a[41])[0] == "0");
  const double gap = std::stod(split(a[41])[1]) - std::stod(split(rg[41])[1]);
  CHECK(gap >= 0);
  CHECK(gap < 1e-2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical configurations give identical records") {
  const Run a = run(cmd_classify, kPred);
  const Run b = run(cmd_classify, kPred);
  CHECK(a.out == b.out);
}

TEST_CASE("reference tables") {
  const auto& t = reference_tables();
  CHECK(t.size() == 45);
  int spot = 0;
  for (const auto& e : t) spot += is_spot_entry(e);
  CHECK(spot == 6);
  const RunConfig cfg = parse_config(R"({"schema": 1, "repro": {"tables": ["3"], "subset": "spot"}})");
  const ReproSettings fast = repro_settings(cfg, true);
  CHECK(fast.bisect_tol == 1e-4);
  CHECK(fast.horizon == 2e3);
  CHECK(fast.spot_only);
  const ReproSettings full = repro_settings(cfg, false);
  CHECK(full.bisect_tol == 1e-7);
  CHECK(full.bisect_tol_table4 == 1e-9);
  CHECK_FALSE(full.horizon);
}
