#include <benchmark/benchmark.h>

#include "tipcast/bifurcation.hpp"
#include "tipcast/classifier.hpp"
#include "tipcast/field.hpp"
#include "tipcast/integrator.hpp"
#include "tipcast/limits.hpp"
#include "tipcast/scenarios.hpp"

using namespace tipcast;

namespace {

const ParameterMap kPred = {{"d", 20}, {"rho", 1}, {"L", 10}, {"p", 0}};

void BM_EvalJet(benchmark::State& state) {
  const TransitionScenario s = build("concave_pred", kPred);
  double t = 0, acc = 0;
  for (auto _ : state) {
    acc += s.g.eval_jet(t, 50).d;
    t += 1e-3;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_EvalJet);

void BM_EvalLivestock(benchmark::State& state) {
  const TransitionScenario s = build("dconcave_livestock", {{"d", 2.5}, {"L", 20}, {"c", 0.02}});
  double t = 0, acc = 0;
  for (auto _ : state) {
    acc += s.g.eval(t, 30);
    t += 1e-3;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_EvalLivestock);

void BM_Integrate(benchmark::State& state) {
  const TransitionScenario s = build("concave_pred", kPred);
  const double span = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(s.g, -span / 2, 80, span / 2).back().x);
  }
}
BENCHMARK(BM_Integrate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_LimitStructure(benchmark::State& state) {
  const TransitionScenario s = build("concave_pred", kPred);
  for (auto _ : state) {
    benchmark::DoNotOptimize(limit_structure(s.g_minus, LimitClass::Concave, {0, 0}, {}).min_gap);
  }
}
BENCHMARK(BM_LimitStructure)->Unit(benchmark::kMillisecond);

void BM_ClassifyConcave(benchmark::State& state) {
  const TransitionScenario s = build("concave_pred", kPred);
  ClassifyOptions o = default_options(s);
  o.horizon = static_cast<double>(state.range(0));
  o.full_witnesses = false;
  for (auto _ : state) benchmark::DoNotOptimize(classify(s, o).kase);
}
BENCHMARK(BM_ClassifyConcave)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ClassifyCachedLimits(benchmark::State& state) {
  const Family f = family("concave_pred", {{"rho", 1}, {"L", 10}, {"p", 0}}, "d");
  ClassifyOptions o = default_options(f(0));
  o.horizon = 2000;
  o.full_witnesses = false;
  o.cache = std::make_shared<LimitCache>();
  double d = 10;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(f(d), o).kase);
    d += 1e-3;
  }
}
BENCHMARK(BM_ClassifyCachedLimits)->Unit(benchmark::kMillisecond);

void BM_ClassifyDConcave(benchmark::State& state) {
  const TransitionScenario s = build("dconcave_livestock", {{"d", 2.5}, {"L", 20}, {"c", 0.02}});
  ClassifyOptions o = default_options(s);
  o.horizon = 2000;
  o.full_witnesses = false;
  for (auto _ : state) benchmark::DoNotOptimize(classify(s, o).kase);
}
BENCHMARK(BM_ClassifyDConcave)->Unit(benchmark::kMillisecond);

void BM_BisectFast(benchmark::State& state) {
  const Family f = family("concave_pred", {{"rho", 1}, {"L", 20}, {"p", 0}}, "d");
  ClassifyOptions o = default_options(f(0));
  o.horizon = 2000;
  BisectOptions b;
  b.tol = 1e-3;
  b.verify = false;
  for (auto _ : state) benchmark::DoNotOptimize(bisect(f, "d", 0, 50, o, b).mid());
}
BENCHMARK(BM_BisectFast)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
