#include <benchmark/benchmark.h>

#include "raidrel/builder.hpp"
#include "raidrel/distributions.hpp"

using namespace raidrel;

namespace {

ctmc::Ctmc detailed_group(int n, topo::RaidLevel level) {
  return build::build_raid_ctmc(n, level, build::default_detailed(), build::RebuildSpec::from_mean(30), {});
}

void BM_FitPhase3(benchmark::State& s) {
  const dist::Weibull w{1.12, 461386, 0};
  for (auto _ : s) benchmark::DoNotOptimize(dist::fit_phase3(dist::raw_moments(w, 3)));
}
BENCHMARK(BM_FitPhase3);

void BM_ExploreDetailed(benchmark::State& s) {
  const int n = static_cast<int>(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(detailed_group(n, topo::RaidLevel::Raid5).size());
}
BENCHMARK(BM_ExploreDetailed)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Mtta(benchmark::State& s) {
  const auto c = detailed_group(static_cast<int>(s.range(0)), topo::RaidLevel::Raid5);
  for (auto _ : s) benchmark::DoNotOptimize(ctmc::mtta(c).hours);
  s.counters["states"] = static_cast<double>(c.size());
}
BENCHMARK(BM_Mtta)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Uniformization(benchmark::State& s) {
  const auto c = detailed_group(6, topo::RaidLevel::Raid5);
  const double t = 8760.0 * static_cast<double>(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(ctmc::absorption_probability(c, t));
}
BENCHMARK(BM_Uniformization)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
