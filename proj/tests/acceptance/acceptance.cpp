// Acceptance checks. Prints one PASS/FAIL line per criterion, preceded by
// indented detail lines, and exits nonzero when any selected criterion fails.
//
//   acceptance [--criterion N]... [--cli PATH] [--workdir DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "properties.hpp"
#include "tipcast/bifurcation.hpp"
#include "tipcast/classifier.hpp"
#include "tipcast/io.hpp"
#include "tipcast/limits.hpp"
#include "tipcast/scenarios.hpp"

using namespace tipcast;

namespace {

struct Env {
  std::string cli;
  std::filesystem::path workdir;
};

class Report {
 public:
  explicit Report(int id) : id_(id) {}

  void check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    std::cout << "    [" << (ok ? "ok" : "FAILED") << "] " << what << std::endl;
  }
  void note(const std::string& what) { std::cout << "    " << what << std::endl; }

  bool finish(const std::string& title) const {
    std::cout << "criterion " << id_ << ": " << (ok_ ? "PASS" : "FAIL") << "  " << title
              << std::endl;
    return ok_;
  }

 private:
  int id_;
  bool ok_ = true;
};

std::string num(double v, int digits = 10) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Case classify_case(const char* name, const ParameterMap& p) {
  const TransitionScenario s = build(name, p);
  return classify(s, default_options(s)).kase;
}

// Reference cells through the repro driver.
bool check_cells(Report& r, const std::vector<std::string>& tables, bool fast, double tol,
                 double* elapsed, std::function<bool(const io::ReferenceEntry&)> pick = {}) {
  io::RunConfig cfg;
  cfg.repro.tables = tables;
  cfg.repro.subset = "spot";
  const io::ReproSettings st = io::repro_settings(cfg, fast);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<io::ReproRow> rows = io::run_repro(st);
  *elapsed = seconds_since(t0);
  bool ok = true;
  for (const auto& row : rows) {
    if (pick && !pick(row.entry)) continue;
    const std::string cell =
        "table " + row.entry.table + " " + row.entry.row + " " + row.entry.col;
    if (!row.value) {
      r.check(false, cell + ": " + row.error);
      ok = false;
      continue;
    }
    const double err = std::abs(row.value->mid() - row.entry.reference);
    r.check(err <= tol, cell + (fast ? " (fast)" : "") + ": d = " + num(row.value->mid(), 12) +
                            ", reference " + num(row.entry.reference, 12) + ", |diff| " +
                            num(err, 3) + " <= " + num(tol));
    ok = ok && err <= tol;
  }
  return ok;
}

bool criterion1(const Env&) {
  Report r(1);
  double full = 0, fast = 0;
  check_cells(r, {"3"}, false, 1e-3, &full);
  r.check(full <= 1800, "full-fidelity run took " + num(full, 4) + " s (limit 1800 s)");
  check_cells(r, {"3"}, true, 5e-2, &fast);
  r.check(fast <= 120, "fast run took " + num(fast, 4) + " s (limit 120 s)");
  return r.finish("reference table 3 at p=0, L in {1, 10, 20}");
}

bool criterion2(const Env&) {
  Report r(2);
  double t = 0;
  check_cells(r, {"3_V2"}, false, 1e-3, &t);
  r.note("run time " + num(t, 4) + " s");
  return r.finish("migration variant d(1,10,0)");
}

bool criterion3(const Env&) {
  Report r(3);
  double t = 0;
  check_cells(r, {"4"}, false, 1e-4, &t);
  r.note("run time " + num(t, 4) + " s");
  return r.finish("reference table 4 spot checks d(2,0.01), d(20,0.02)");
}

bool criterion4(const Env&) {
  Report r(4);
  const std::pair<double, Case> expect[] = {{0, Case::C}, {2, Case::A}, {5, Case::C}};
  for (const auto& [p, c] : expect) {
    const Case got = classify_case("concave_pred", {{"d", 42}, {"rho", 1}, {"L", 1}, {"p", p}});
    r.check(got == c, "p=" + num(p) + ": " + to_string(got) + " (expected " + to_string(c) + ")");
  }
  return r.finish("phase non-uniqueness at L=1, d=42");
}

bool criterion5(const Env&) {
  Report r(5);
  const Case got = classify_case("fig7_nonconcave", {{"a", 4.2}});
  r.check(got == Case::C2, std::string("a=4.2: ") + to_string(got));
  return r.finish("non-concave transition a=4.2 is C2");
}

bool criterion6(const Env&) {
  Report r(6);
  const Case at0 = classify_case("order_example", {{"b", 0}});
  r.check(at0 == Case::C2, std::string("b=0: ") + to_string(at0));

  const Family f = family("order_example", {}, "b");
  PairOptions po;
  po.steps = 40;
  po.bisect.tol = 1e-7;
  const ClassifyOptions o = default_options(f(0));
  const PairResult pr = find_tipping_pair(f, "b", 0, 20, o, po);
  bool ok = pr.kind == PairKind::Pair && pr.edges.size() == 2 &&
            pr.edges[0].case_lo.kase == Case::C2 && pr.edges[0].case_hi.kase == Case::A &&
            pr.edges[1].case_lo.kase == Case::A && pr.edges[1].case_hi.kase == Case::C1;
  std::string what = std::string("tipping pair over b in [0, 20]: ") + to_string(pr.kind);
  if (pr.uniform) what += std::string(", every scan point ") + to_string(*pr.uniform);
  for (const auto& e : pr.edges) {
    what += "; " + std::string(to_string(e.case_lo.kase)) + "|" + to_string(e.case_hi.kase) +
            " at " + num(e.mid(), 12);
  }
  r.check(ok, what);
  if (!ok) {
    // Where the classification does change.
    const PairResult wide = find_tipping_pair(f, "b", 0, 40, o, {8, 1, po.bisect});
    std::string info = std::string("over [0, 40]: ") + to_string(wide.kind);
    if (wide.unresolved) {
      info += ", C2|C1 bracket [" + num(wide.unresolved->first, 12) + ", " +
              num(wide.unresolved->second, 12) + "]";
    }
    r.note(info);
  }
  return r.finish("order example: C2 at b=0 and a C2->A->C1 pair on [0, 20]");
}

bool criterion7(const Env&) {
  Report r(7);
  {
    ScenarioDefinition d;
    d.cls = LimitClass::Concave;
    d.g = d.g_minus = d.g_plus = "-x^2 + 1";
    const TransitionScenario s = build(d);
    const Classification c = classify(s, default_options(s));
    r.check(c.kase == Case::A, std::string("-x^2+1: ") + to_string(c.kase));
    const LimitStructure ls = limit_structure(s.g_minus, LimitClass::Concave, {0, 0}, {});
    const double e_r = ls.lower().exponent, e_a = ls.upper().exponent;
    r.check(std::abs(e_r - 2) <= 1e-3 && std::abs(e_a + 2) <= 1e-3,
            "-x^2+1 exponents " + num(e_r) + ", " + num(e_a));
  }
  {
    ScenarioDefinition d;
    d.cls = LimitClass::DConcave;
    d.g = d.g_minus = d.g_plus = "-x^3 + x";
    const TransitionScenario s = build(d);
    const Classification c = classify(s, default_options(s));
    r.check(c.kase == Case::A, std::string("-x^3+x: ") + to_string(c.kase));
    const LimitStructure ls = limit_structure(s.g_minus, LimitClass::DConcave, {0, 0}, {});
    const double v[] = {ls.solutions.at(0).value_at(0), ls.solutions.at(1).value_at(0),
                        ls.solutions.at(2).value_at(0)};
    r.check(std::abs(v[0] + 1) <= 1e-9 && std::abs(v[1]) <= 1e-9 && std::abs(v[2] - 1) <= 1e-9,
            "-x^3+x limit solutions (" + num(v[0]) + ", " + num(v[1]) + ", " + num(v[2]) + ")");
    const double tracked[] = {c.solutions.at("l_g").back().x, c.solutions.at("m_g").back().x,
                              c.solutions.at("u_g").back().x};
    r.check(std::abs(tracked[0] + 1) <= 1e-6 && std::abs(tracked[1]) <= 1e-6 &&
                std::abs(tracked[2] - 1) <= 1e-6,
            "-x^3+x tracked (l_g, m_g, u_g) end at (" + num(tracked[0]) + ", " +
                num(tracked[1]) + ", " + num(tracked[2]) + ")");
  }
  {
    const Family f = family("cubic_shift", {}, "delta");
    PairOptions po;
    po.steps = 16;
    po.bisect.tol = 1e-4;
    const PairResult pr = find_tipping_pair(f, "delta", -1, 1, default_options(f(0)), po);
    const double fold = oracle::cubic_fold();
    const bool ok = pr.kind == PairKind::Pair && pr.edges.size() == 2 &&
                    std::abs(pr.edges[0].mid() + fold) <= 1e-4 &&
                    std::abs(pr.edges[1].mid() - fold) <= 1e-4;
    std::string what = std::string("cubic pair ") + to_string(pr.kind);
    for (const auto& e : pr.edges) what += " " + num(e.mid(), 8);
    r.check(ok, what + " vs +-" + num(fold, 8));
  }
  return r.finish("analytic oracles");
}

bool criterion8(const Env&) {
  Report r(8);
  double worst = 0;
  std::string where;
  for (const auto& nf : props::catalog_fields()) {
    const props::Worst w = props::ad_vs_fd(nf.field, nf.box, 1000, 2024);
    if (w.value >= worst) {
      worst = w.value;
      where = nf.name + " " + w.where;
    }
  }
  r.check(worst <= 1e-6, "AD vs FD, 1000 samples per field: worst " + num(worst, 3) + " (" +
                             where + ")");

  const props::Worst rate = props::rate_identity(20000, 99);
  r.check(rate.value <= 1e-13, "spline rate identity: worst " + num(rate.value, 3));

  const props::Worst cmp = props::comparison_monotonicity();
  r.check(cmp.value <= 1e-7, "comparison monotonicity: worst excess " + num(cmp.value, 3));

  const auto failures = props::classification_invariance(props::builtin_examples());
  r.check(failures.empty(), "classification invariance under tolerances/10 and horizon*2 (" +
                                std::to_string(props::builtin_examples().size()) + " examples)");
  for (const auto& f : failures) r.note("  " + f);

  std::vector<double> ds;
  for (double L : {1.0, 5.0, 10.0}) {
    const Family f = family("concave_pred", {{"rho", 1}, {"L", L}, {"p", 0}}, "d");
    BisectOptions b;
    b.tol = 1e-3;
    b.verify = false;
    ds.push_back(bisect(f, "d", 0, 50, default_options(f(0)), b).mid());
  }
  r.check(ds[0] > ds[1] && ds[1] > ds[2],
          "d(1,L,0) for L = 1, 5, 10: " + num(ds[0], 8) + ", " + num(ds[1], 8) + ", " +
              num(ds[2], 8));
  return r.finish("property suites");
}

int run_cli(const Env& env, const std::string& args) {
  const std::string cmd = "\"" + env.cli + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion9(const Env& env) {
  Report r(9);
  if (env.cli.empty()) {
    r.check(false, "no CLI binary given (--cli)");
    return r.finish("determinism of repro --fast");
  }
  std::filesystem::create_directories(env.workdir);
  const auto cfg = env.workdir / "repro_spot.json";
  {
    std::ofstream f(cfg);
    f << R"({"schema": 1, "repro": {"subset": "spot"}})" << '\n';
  }
  std::vector<std::string> outputs;
  const std::pair<const char*, const char*> runs[] = {
      {"run1.csv", ""}, {"run2.csv", ""}, {"run3.csv", " --jobs 2"}};
  for (const auto& [name, extra] : runs) {
    const auto out = env.workdir / name;
    std::filesystem::remove(out);
    const int code = run_cli(env, "repro --config \"" + cfg.string() + "\" --fast" + extra +
                                      " --set output.path=\"" + out.string() + "\"");
    r.check(code == 0, std::string("repro --fast") + extra + " -> " + name);
    outputs.push_back(slurp(out));
  }
  r.check(!outputs[0].empty(), "output is nonempty (" + std::to_string(outputs[0].size()) + " bytes)");
  r.check(outputs[0] == outputs[1], "two sequential runs are byte-identical");
  r.check(outputs[0] == outputs[2], "run with --jobs 2 is byte-identical");
  return r.finish("determinism of repro --fast");
}

}  // namespace

int main(int argc, char** argv) {
  Env env;
  env.workdir = std::filesystem::temp_directory_path() / "tipcast_acceptance";
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else if (a == "--cli" && i + 1 < argc) {
      env.cli = argv[++i];
    } else if (a == "--workdir" && i + 1 < argc) {
      env.workdir = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--criterion N]... [--cli PATH] [--workdir DIR]\n";
      return 64;
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::function<bool(const Env&)> checks[] = {criterion1, criterion2, criterion3,
                                                    criterion4, criterion5, criterion6,
                                                    criterion7, criterion8, criterion9};
  bool all = true;
  for (int id : selected) {
    if (id < 1 || id > 9) {
      std::cerr << "unknown criterion " << id << '\n';
      return 64;
    }
    try {
      all = checks[id - 1](env) && all;
    } catch (const std::exception& e) {
      std::cout << "    error: " << e.what() << '\n'
                << "criterion " << id << ": FAIL  (exception)" << std::endl;
      all = false;
    }
  }
  return all ? 0 : 1;
}
