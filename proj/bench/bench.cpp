#include <benchmark/benchmark.h>

#include <memory>

#include "fkdyn/dynamics.hpp"
#include "fkdyn/estimators.hpp"
#include "fkdyn/parallel.hpp"
#include "fkdyn/weights.hpp"

using namespace fk;

namespace {

std::shared_ptr<const Graph> torus(int n) {
  auto geom = LatticeGeometry::build(2, n, LatticeKind::Torus);
  return std::make_shared<const Graph>(host_graph(geom, BoundaryCondition{}));
}

ModelParams critical(double q) { return ModelParams{self_dual_point(q), q, std::nullopt}; }

// Single chain, events per second, by connectivity engine.
void BM_Engine(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? EngineKind::Naive : EngineKind::FullyDynamic;
  const int n = static_cast<int>(state.range(1));
  auto g = torus(n);
  const EventStream stream(1, 0, static_cast<std::uint32_t>(g->num_edges()));
  const std::uint64_t steps = 20 * g->num_edges();
  for (auto _ : state) {
    Chain c(g, critical(2.0), kind, Init::Empty);
    run_discrete(c, steps, stream);
    benchmark::DoNotOptimize(c.configuration().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * steps));
  state.SetLabel(kind == EngineKind::Naive ? "naive" : "fully_dynamic");
}
BENCHMARK(BM_Engine)->ArgsProduct({{0, 1}, {8, 16, 32}})->Unit(benchmark::kMillisecond);

// Replica batch through map_replicas: threads = 1 is the serial reference path.
void BM_Replicas(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  auto g = torus(16);
  const auto E = static_cast<std::uint32_t>(g->num_edges());
  const std::size_t replicas = 32;
  for (auto _ : state) {
    auto open = map_replicas(replicas, threads, [&](std::size_t r) {
      Chain c(g, critical(2.0), EngineKind::FullyDynamic, Init::Empty);
      run_continuous(c, 5.0, EventStream(7, static_cast<std::uint32_t>(r), E));
      return count_open(c.configuration());
    });
    benchmark::DoNotOptimize(open.data());
  }
  state.SetLabel(threads <= 1 ? "serial" : "openmp");
}
BENCHMARK(BM_Replicas)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
