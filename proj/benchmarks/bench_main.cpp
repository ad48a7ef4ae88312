#include <random>

#include <benchmark/benchmark.h>

#include "lsc/cluster_opt.hpp"
#include "lsc/clustering.hpp"
#include "lsc/metrics.hpp"
#include "lsc/pipeline.hpp"

namespace {

using namespace lsc;

EstimatedMap simulated_map() {
  WorldSpec ws;
  ws.rng_seed = 1;
  FrontendConfig fc;
  fc.drift.scale_sigma = 1e-3;
  return simulate(generate_corridor(ws), fc.drift, fc.observation);
}

void BM_AssignCorridor(benchmark::State& state) {
  const EstimatedMap m = simulated_map();
  for (auto _ : state) {
    ClusterStore store;
    for (const auto& o : m.observations) assign(store, o, m);
    benchmark::DoNotOptimize(store.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m.observations.size()));
}
BENCHMARK(BM_AssignCorridor);

void BM_SolveGlobal(benchmark::State& state) {
  const EstimatedMap m = simulated_map();
  ClusterStore store;
  for (const auto& o : m.observations) assign(store, o, m);
  const OptProblem p = build_problem(store, m, Scope::global());
  for (auto _ : state) benchmark::DoNotOptimize(solve(p).report.final_objective);
  state.counters["edges"] = static_cast<double>(p.edges.size());
  state.counters["points"] = static_cast<double>(p.variables.size());
}
BENCHMARK(BM_SolveGlobal)->Unit(benchmark::kMillisecond);

void BM_SimilarityFit(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Vec3> src, dst;
  for (long i = 0; i < state.range(0); ++i) {
    src.emplace_back(u(rng), u(rng), u(rng));
    dst.push_back(1.2 * src.back() + Vec3(1, 2, 3));
  }
  for (auto _ : state) benchmark::DoNotOptimize(umeyama_alignment(src, dst, AlignMode::Similarity).scale);
}
BENCHMARK(BM_SimilarityFit)->Arg(100)->Arg(1200);

void BM_RunMode(benchmark::State& state) {
  WorldSpec ws;
  ws.rng_seed = 1;
  const World w = generate_corridor(ws);
  FrontendConfig fc;
  fc.drift.scale_sigma = 1e-3;
  ScheduleConfig sc;
  sc.mode = static_cast<Mode>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run(w, fc, sc).metrics.ate_rmse);
  state.SetLabel(to_string(sc.mode));
}
BENCHMARK(BM_RunMode)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
