#include <benchmark/benchmark.h>

#include <random>

#include "arapdepth/arap.hpp"
#include "arapdepth/pipeline.hpp"
#include "arapdepth/segmentation.hpp"
#include "arapdepth/synthetic.hpp"
#include "arapdepth/trws.hpp"

using namespace arapdepth;

namespace {

const FrameSequence& scene() {
  static const SyntheticScene s(SceneSpec::two_object(0.1), 1);
  return s.sequence();
}

void BM_ArapEnergy(benchmark::State& state) {
  const auto inst = random_arap_instance(1, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(arap_energy(inst.problem, inst.next_depths));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inst.problem.edges().size()));
}
BENCHMARK(BM_ArapEnergy)->Arg(300)->Arg(3000);

void BM_ArapGradient(benchmark::State& state) {
  const auto inst = random_arap_instance(2, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(arap_gradient(inst.problem, inst.next_depths));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inst.problem.edges().size()));
}
BENCHMARK(BM_ArapGradient)->Arg(300)->Arg(3000);

void BM_SolveArap(benchmark::State& state) {
  const auto inst = random_arap_instance(3, static_cast<int>(state.range(0)));
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_arap(inst.problem, inst.problem.ref_depths(), cfg));
  }
}
BENCHMARK(BM_SolveArap)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_TrwsGrid(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int labels = 8;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PairwiseMrf mrf(std::vector<int>(side * side, labels));
  for (int i = 0; i < side * side; ++i) {
    std::vector<double> c(labels);
    for (double& v : c) v = u(rng);
    mrf.set_unary(i, c);
  }
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      std::vector<double> c(labels * labels);
      for (double& v : c) v = u(rng);
      if (x + 1 < side) mrf.add_edge(y * side + x, y * side + x + 1, c);
      if (y + 1 < side) mrf.add_edge(y * side + x, (y + 1) * side + x, c);
    }
  for (auto _ : state) benchmark::DoNotOptimize(solve_trws(mrf, {10, 0.0}));
}
BENCHMARK(BM_TrwsGrid)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Slic(benchmark::State& state) {
  const Image& img = scene().images[0];
  for (auto _ : state) benchmark::DoNotOptimize(slic_segment(img, static_cast<int>(state.range(0)), 10.0));
}
BENCHMARK(BM_Slic)->Arg(150)->Arg(1100)->Unit(benchmark::kMillisecond);

void BM_PropagateDepth(benchmark::State& state) {
  const FrameSequence& s = scene();
  RunConfig cfg;
  cfg.segmentation.superpixels = static_cast<int>(state.range(0));
  cfg.segmentation.knn = 10;
  const SceneFrame ref{s.images[0], s.depths[0], s.intrinsics};
  for (auto _ : state) benchmark::DoNotOptimize(propagate_depth(ref, s.images[1], s.flows[0], cfg));
}
BENCHMARK(BM_PropagateDepth)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
