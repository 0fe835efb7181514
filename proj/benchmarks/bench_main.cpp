#include <benchmark/benchmark.h>

#include "rara/analytic.hpp"
#include "rara/mpr.hpp"
#include "rara/sim.hpp"

namespace {

void BM_ThroughputExact(benchmark::State& state) {
  const rara::SystemParams p{0.8, static_cast<int>(state.range(0)), 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(rara::throughput_exact(p));
}
BENCHMARK(BM_ThroughputExact)->RangeMultiplier(4)->Range(1, 4096);

void BM_StationaryPowerIteration(benchmark::State& state) {
  const auto p = rara::transition_matrix({0.8, static_cast<int>(state.range(0)), 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(rara::stationary_power_iteration(p));
}
BENCHMARK(BM_StationaryPowerIteration)->Arg(1)->Arg(10)->Arg(50);

void BM_SimulateSessions(benchmark::State& state) {
  const auto c = rara::sim::SimConfig::poisson({0.8, static_cast<int>(state.range(0)), 0.1}, 100000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rara::sim::run(c));
  state.SetItemsProcessed(state.iterations() * c.n_sessions);
}
BENCHMARK(BM_SimulateSessions)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Decorrelate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto ch = rara::mpr::generate_channels(m + 1, m, 3);
  const auto h = rara::mpr::composite_matrix(ch);
  const Eigen::VectorXcd s = Eigen::VectorXcd::Ones(m + 1);
  const auto block = rara::mpr::simulate_reception(h, ch, s, 0.01, 0.01, 4);
  for (auto _ : state) benchmark::DoNotOptimize(rara::mpr::decorrelate(h, block));
}
BENCHMARK(BM_Decorrelate)->Arg(1)->Arg(4)->Arg(10)->Arg(30);

void BM_CollisionTrial(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rara::mpr::run_collision_trial(m + 1, m, 1e-4, seed++));
}
BENCHMARK(BM_CollisionTrial)->Arg(2)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
