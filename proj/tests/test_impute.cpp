#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "riaft/ampute.hpp"
#include "riaft/impute.hpp"
#include "riaft/rng.hpp"
#include "riaft/simulate.hpp"

using namespace riaft;

namespace {

// outcome + two covariates, the second linearly driven by the first
SurvivalDataset linear_pair(std::size_t n, Rng& rng) {
  SurvivalDataset ds;
  ds.n_clusters = 1;
  std::vector<double> x1(n), x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.normal();
    x2[i] = 2.0 * x1[i] + rng.normal(0.0, 0.5);
    ds.y.push_back(std::exp(rng.normal()));
    ds.delta.push_back(1);
    ds.cluster.push_back(1);
  }
  ds.column_names = {"x1", "x2"};
  ds.column_types = {ColumnType::Continuous, ColumnType::Continuous};
  ds.levels = {{}, {}};
  ds.X = {x1, x2};
  ds.mask.cols.assign(2, std::vector<std::uint8_t>(n, 0));
  return ds;
}

}  // namespace

TEST_CASE("complete data passes through untouched") {
  Rng rng(1);
  const auto ds = linear_pair(100, rng);
  const auto out = chained_impute(ds, {});
  CHECK(out.X == ds.X);
}

TEST_CASE("PMM imputes only observed values") {
  Rng rng(2);
  auto ds = linear_pair(300, rng);
  std::set<double> observed;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (i % 4 == 0)
      ds.mask.set(i, 1, true);
    else
      observed.insert(ds.X[1][i]);
  }
  ImputeConfig cfg;
  cfg.seed = 3;
  const auto out = chained_impute(ds, cfg);
  CHECK_FALSE(out.mask.any());
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.mask.at(i, 1)) CHECK(observed.count(out.X[1][i]) == 1);
  // observed cells stay exactly
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (!ds.mask.at(i, 1)) CHECK(out.X[1][i] == ds.X[1][i]);
}

TEST_CASE("conditional imputation beats a marginal-mean fill under MCAR") {
  double rmse_pmm = 0.0, rmse_mean = 0.0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    Rng rng(100 + static_cast<std::uint64_t>(r));
    auto ds = linear_pair(400, rng);
    const auto truth = ds.X[1];
    double observed_mean = 0.0;
    std::size_t n_obs = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (rng.uniform() < 0.3)
        ds.mask.set(i, 1, true);
      else {
        observed_mean += ds.X[1][i];
        ++n_obs;
      }
    }
    observed_mean /= static_cast<double>(n_obs);
    ImputeConfig cfg;
    cfg.seed = 200 + static_cast<std::uint64_t>(r);
    const auto out = chained_impute(ds, cfg);
    double se_pmm = 0.0, se_mean = 0.0;
    double n_mis = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (!ds.mask.at(i, 1)) continue;
      se_pmm += (out.X[1][i] - truth[i]) * (out.X[1][i] - truth[i]);
      se_mean += (observed_mean - truth[i]) * (observed_mean - truth[i]);
      n_mis += 1.0;
    }
    rmse_pmm += std::sqrt(se_pmm / n_mis);
    rmse_mean += std::sqrt(se_mean / n_mis);
  }
  CHECK(rmse_pmm / reps < rmse_mean / reps);
}

TEST_CASE("categorical targets are imputed to valid codes") {
  Rng rng(5);
  const std::size_t n = 300;
  SurvivalDataset ds;
  ds.n_clusters = 1;
  std::vector<double> x1(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.normal();
    g[i] = x1[i] > 0.3 ? 2.0 : (x1[i] > -0.3 ? 1.0 : 0.0);
    ds.y.push_back(std::exp(rng.normal()));
    ds.delta.push_back(rng.bernoulli(0.7));
    ds.cluster.push_back(1);
  }
  ds.column_names = {"x1", "grp"};
  ds.column_types = {ColumnType::Continuous, ColumnType::Categorical};
  ds.levels = {{}, {"a", "b", "c"}};
  ds.X = {x1, g};
  ds.mask.cols.assign(2, std::vector<std::uint8_t>(n, 0));
  const auto truth = g;
  for (std::size_t i = 0; i < n; i += 5) ds.mask.set(i, 1, true);

  ImputeConfig cfg;
  cfg.seed = 6;
  const auto out = chained_impute(ds, cfg);
  double agree = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK((out.X[1][i] == 0.0 || out.X[1][i] == 1.0 || out.X[1][i] == 2.0));
    if (ds.mask.at(i, 1)) {
      agree += out.X[1][i] == truth[i] ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  // the class is strongly predictable from x1; far above the 1/3 chance rate
  CHECK(agree / total > 0.6);
}

TEST_CASE("imputation after the default amputation plan completes the data") {
  DgpConfig cfg;
  cfg.mode = DgpMode::VarSelect;
  cfg.n_clusters = 5;
  cfg.cluster_size = 100;
  cfg.seed = 8;
  const auto sim = simulate_dataset(cfg);
  const auto amputated = ampute(sim.data, default_amputation_plan(), 9);
  ImputeConfig icfg;
  icfg.seed = 10;
  const auto out = chained_impute(amputated, icfg);
  CHECK_FALSE(out.mask.any());
  // determinism
  const auto out2 = chained_impute(amputated, icfg);
  CHECK(out.X == out2.X);
}

TEST_CASE("fully missing column is an error") {
  Rng rng(11);
  auto ds = linear_pair(50, rng);
  for (std::size_t i = 0; i < ds.n(); ++i) ds.mask.set(i, 0, true);
  CHECK_THROWS_AS(chained_impute(ds, {}), DataError);
}
