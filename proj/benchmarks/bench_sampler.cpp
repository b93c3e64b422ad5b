// Hot-loop timings: one backfitting sweep, one full Gibbs iteration, and the
// truncated-normal sampler across tail regimes.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "riaft/forest.hpp"
#include "riaft/rng.hpp"
#include "riaft/sampler.hpp"
#include "riaft/simulate.hpp"

namespace {

using namespace riaft;

PredictorMatrix random_matrix(std::size_t n, std::size_t p, Rng& rng) {
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<PredictorColumn> schema;
  for (std::size_t j = 0; j < p; ++j) {
    for (auto& v : cols[j]) v = rng.normal();
    schema.push_back({"x" + std::to_string(j + 1), ColumnType::Continuous, 0});
  }
  return PredictorMatrix(std::move(cols), std::move(schema));
}

void BM_backfit_sweep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t p = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const auto X = random_matrix(n, p, rng);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(2.0 * X.at(i, 0)) + 0.5 * X.at(i, 1) + rng.normal(0.0, 0.3);
  auto forest = Forest::init(200, y, X);
  for (int warm = 0; warm < 50; ++warm) forest.backfit_sweep(X, y, rng);
  for (auto _ : state) {
    forest.backfit_sweep(X, y, rng);
    benchmark::DoNotOptimize(forest.sigma2());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(forest.m()));
}
BENCHMARK(BM_backfit_sweep)->Args({500, 10})->Args({1000, 28})->Args({2000, 28})->Unit(benchmark::kMillisecond);

void BM_chain_iteration(benchmark::State& state) {
  DgpConfig dgp;
  dgp.mode = DgpMode::VarSelect;
  dgp.n_clusters = 5;
  dgp.cluster_size = static_cast<int>(state.range(0)) / 5;
  dgp.seed = 3;
  const auto sim = simulate_dataset(dgp);
  ChainConfig warm;
  warm.draws = 60;
  warm.burn_in = 30;
  warm.m = 200;
  warm.keep_f = false;
  for (auto _ : state) {
    ChainConfig cfg = warm;
    cfg.draws = 20;
    cfg.burn_in = 10;
    benchmark::DoNotOptimize(run_chain(sim.data, cfg).n_kept());
  }
  state.SetItemsProcessed(state.iterations() * 20);
}
BENCHMARK(BM_chain_iteration)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_trunc_normal(benchmark::State& state) {
  Rng rng(7);
  const double a = static_cast<double>(state.range(0));
  double sink = 0.0;
  for (auto _ : state) sink += rng.trunc_normal_lower(0.0, 1.0, a);
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(BM_trunc_normal)->Arg(-3)->Arg(0)->Arg(2)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
