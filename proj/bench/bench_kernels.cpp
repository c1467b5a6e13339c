// Serial vs OpenMP timings of the heavy kernels. Arg 0 = serial, 1 = parallel.
#include "ctf/diamond.hpp"
#include "ctf/experiments.hpp"
#include "ctf/field.hpp"
#include "ctf/sets.hpp"
#include "ctf/tst.hpp"

#include <benchmark/benchmark.h>

using namespace ctf;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

struct Carpet {
  PointSet E = gen_sierpinski_carpet(4);
  NetHierarchy H = build_nested_nets(E, 0, 6);
  CubeTree T = build_christ_cubes(H, E, 0.25);
  CoarseField F = build_epsilon_field(T, E, FieldParams::make(0.1, 2.0, 2));
};

const Carpet& carpet() {
  static const Carpet c;
  return c;
}

void BM_FieldBuild(benchmark::State& st) {
  const Carpet& c = carpet();
  for (auto _ : st) benchmark::DoNotOptimize(build_epsilon_field(c.T, c.E, FieldParams::make(0.1, 2.0, 2), exec_of(st)));
}

void BM_WeakSums(benchmark::State& st) {
  const Carpet& c = carpet();
  const auto suite = curve_suite(8, 3, 0.05, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(verify_suite(suite, c.T, c.E, c.F, VerifyOptions{}, exec_of(st)));
}

void BM_PointBetaSum(benchmark::State& st) {
  const PointSet E = gen_random_cloud(400, 2, 5);
  const NetHierarchy H = build_nested_nets(E, 0, 7);
  for (auto _ : st) benchmark::DoNotOptimize(point_beta_sum(E, H, 2.0, 2.0, exec_of(st)));
}

void BM_Blowup(benchmark::State& st) {
  const DiamondSchedule S = default_schedule(3);
  BlowupOptions o;
  o.trials = 8;
  o.ex = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(expected_blowup(S, o));
}

}  // namespace

BENCHMARK(BM_FieldBuild)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeakSums)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PointBetaSum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Blowup)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
