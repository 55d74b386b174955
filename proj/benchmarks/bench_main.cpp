#include <benchmark/benchmark.h>

#include <vector>

#include "concur/concurrence.hpp"
#include "concur/estimators.hpp"
#include "concur/models.hpp"
#include "concur/simulate.hpp"

using namespace concur;

namespace {

SiteSet pair_at(double h) {
  const std::vector<double> xs{0.0, h};
  return SiteSet::line(xs);
}

Sample logistic_sample(std::size_t n) {
  SeededRng rng(11);
  return max_stable_sample(Logistic{0.5}, pair_at(1.0), n, rng);
}

void BM_EcpMcBrownResnick(benchmark::State& state) {
  const BrownResnick br{{1.0 / 1.627, 1.0}};
  const auto sites = pair_at(1.0);
  McOptions opt;
  opt.n_draws = static_cast<std::size_t>(state.range(0));
  opt.antithetic = true;
  const SeededRng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(ecp_mc(br, sites, opt, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EcpMcBrownResnick)->Arg(10000)->Arg(100000);

void BM_EcpQuadratureExtremalT(benchmark::State& state) {
  const ExtremalT et{{CorrelationFamily::exponential, 10.0, 1.0}, 5.0};
  const std::vector<double> a{0.0}, b{3.0};
  for (auto _ : state) benchmark::DoNotOptimize(ecp_quadrature(et, a, b));
}
BENCHMARK(BM_EcpQuadratureExtremalT);

void BM_SimulateBrownResnickGrid(benchmark::State& state) {
  const BrownResnick br{{1.0 / 3.0, 1.0}};
  const auto grid = SiteSet::regular_grid(0.0, static_cast<double>(state.range(0)), 0.5);
  MaxStableSimulator sim(br, grid);
  SeededRng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sim.draw(rng));
  state.counters["sites"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_SimulateBrownResnickGrid)->Arg(5)->Arg(20);

void BM_LogisticExact(benchmark::State& state) {
  SeededRng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_logistic_exact(0.5, 3, rng));
}
BENCHMARK(BM_LogisticExact);

void BM_Bootstrap(benchmark::State& state) {
  const auto s = logistic_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_cp_bootstrap(s, 10));
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Arg(1000);

void BM_KendallJackknife(benchmark::State& state) {
  const auto s = logistic_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ecp_kendall(s));
}
BENCHMARK(BM_KendallJackknife)->Arg(100)->Arg(1000);

void BM_MultivariateLog(benchmark::State& state) {
  SeededRng rng(4);
  const std::vector<double> xs{0.0, 1.0, 2.0};
  const auto s = max_stable_sample(Logistic{0.5}, SiteSet::line(xs), static_cast<std::size_t>(state.range(0)), rng);
  const std::size_t all[] = {0, 1, 2};
  for (auto _ : state) benchmark::DoNotOptimize(ecp_multivariate_log(s, all, false));
}
BENCHMARK(BM_MultivariateLog)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
