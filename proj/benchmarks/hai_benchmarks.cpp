#include <benchmark/benchmark.h>

#include <random>

#include "hai/acquisition.hpp"
#include "hai/carbon.hpp"
#include "hai/learner.hpp"
#include "hai/memory.hpp"
#include "hai/orchestrator.hpp"
#include "hai/report.hpp"
#include "hai/synthetic.hpp"

namespace {

using namespace hai;

Batch random_batch(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> x(0.0, 1.0);
  std::uniform_int_distribution<ClassLabel> y(0, static_cast<ClassLabel>(classes - 1));
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector f(d);
    for (auto& v : f) v = x(rng);
    b.samples.push_back({i, std::move(f), y(rng)});
  }
  return b;
}

void BM_Update(benchmark::State& state) {
  const auto arch = state.range(0) == 0 ? Architecture::Logistic : Architecture::Mlp;
  const ModelShape shape{arch, 16, 4, arch == Architecture::Mlp ? std::size_t{32} : 0};
  const auto model = ModelState::seeded(shape, 1);
  const auto batch = random_batch(static_cast<std::size_t>(state.range(1)), 16, 4, 2);
  UpdateConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(update(model, batch, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Update)->ArgsProduct({{0, 1}, {64, 512}});

void BM_ScorePool(benchmark::State& state) {
  const ModelShape shape{Architecture::Logistic, 16, 4, 0};
  std::vector<ModelState> members;
  for (std::uint64_t k = 0; k < 5; ++k) members.push_back(ModelState::seeded(shape, k + 1));
  const Ensemble ensemble(std::move(members));
  const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), 16, 4, 3);
  std::vector<UnlabeledSample> pool;
  for (const auto& s : batch.samples) pool.push_back({s.id, s.features});
  for (auto _ : state) benchmark::DoNotOptimize(score_pool(pool, ensemble, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScorePool)->Arg(256)->Arg(4096);

void BM_Schedule(benchmark::State& state) {
  const auto trace = diurnal_trace(4096, 0.4, 0.15, 0.1, 7);
  const CarbonLedger ledger(1e9);
  const DeviceProfile device;
  const WorkItem item{1, std::nullopt, {{Pathway::Full, 1'000'000}, {Pathway::Shallow, 200'000}}, std::nullopt};
  const auto lookahead = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(schedule(item, trace, 100, ledger, device, lookahead));
}
BENCHMARK(BM_Schedule)->Arg(4)->Arg(256);

void BM_ParetoFrontier(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TradeoffPoint> pts;
  for (std::int64_t i = 0; i < state.range(0); ++i) pts.push_back({u(rng), u(rng), 0, i, 0});
  for (auto _ : state) benchmark::DoNotOptimize(pareto_frontier(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParetoFrontier)->Arg(1000)->Arg(100000);

void BM_ReservoirInsert(benchmark::State& state) {
  const auto batch = random_batch(10000, 8, 2, 9);
  for (auto _ : state) {
    ReplayBuffer buf(static_cast<std::size_t>(state.range(0)));
    for (const auto& s : batch.samples) buf.insert(s, s.id % 4, 1);
    benchmark::DoNotOptimize(buf.size());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ReservoirInsert)->Arg(200);

void BM_RunSmallStream(benchmark::State& state) {
  const auto stream = make_stream(class_pair_specs(3, 3.0, 0.6, 200, 100), 6, 1);
  RunConfig cfg;
  cfg.budgets.labels_per_task = 30;
  for (auto _ : state) benchmark::DoNotOptimize(run(stream, cfg).mean_accuracy);
}
BENCHMARK(BM_RunSmallStream)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
