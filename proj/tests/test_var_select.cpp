#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "oracles.hpp"
#include "riaft/ampute.hpp"
#include "riaft/impute.hpp"
#include "riaft/simulate.hpp"
#include "riaft/var_select.hpp"

using namespace riaft;

namespace {

SurvivalDataset noise_data(std::size_t n, std::size_t L, int K, std::uint64_t seed) {
  Rng rng(seed);
  SurvivalDataset ds;
  ds.n_clusters = K;
  for (std::size_t i = 0; i < n; ++i) {
    ds.y.push_back(std::exp(rng.normal()));
    ds.delta.push_back(rng.bernoulli(0.7));
    ds.cluster.push_back(static_cast<int>(i % static_cast<std::size_t>(K)) + 1);
  }
  ds.X.assign(L, std::vector<double>(n));
  for (std::size_t j = 0; j < L; ++j) {
    ds.column_names.push_back("x" + std::to_string(j + 1));
    ds.column_types.push_back(ColumnType::Continuous);
    ds.levels.push_back({});
    for (auto& v : ds.X[j]) v = rng.normal();
  }
  ds.mask.cols.assign(L, std::vector<std::uint8_t>(n, 0));
  return ds;
}

}  // namespace

TEST_CASE("average_vip") {
  PosteriorDraws d;
  d.vip = {{1.0, 0.0}, {0.0, 1.0}};
  d.iteration = {1, 2};
  CHECK(average_vip(d) == std::vector<double>{0.5, 0.5});
  d.vip = {{0.25, 0.75}, {0.25, 0.75}, {0.25, 0.75}};
  CHECK(average_vip(d) == std::vector<double>{0.25, 0.75});
  PosteriorDraws empty;
  CHECK_THROWS(average_vip(empty));
}

TEST_CASE("permute_outcomes: identity, multiset, independence, untouched fields") {
  auto one = noise_data(1, 2, 1, 1);
  const auto p1 = permute_outcomes(one, 9);
  CHECK(p1.y == one.y);
  CHECK(p1.delta == one.delta);

  auto ds = noise_data(2000, 3, 4, 2);
  // tie outcomes to x1 so the permutation demonstrably breaks the link
  for (std::size_t i = 0; i < ds.n(); ++i) ds.y[i] = std::exp(2.0 * ds.X[0][i]);
  const auto perm = permute_outcomes(ds, 3);

  std::multiset<std::pair<double, int>> before, after;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    before.insert({ds.y[i], ds.delta[i]});
    after.insert({perm.y[i], perm.delta[i]});
  }
  CHECK(before == after);
  CHECK(perm.X == ds.X);
  CHECK(perm.cluster == ds.cluster);

  std::vector<double> logy(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) logy[i] = std::log(perm.y[i]);
  CHECK(std::fabs(oracle::correlation(ds.X[0], logy)) < 0.05);
}

TEST_CASE("empirical quantile with the ceiling-index convention") {
  CHECK(empirical_quantile_higher({1, 2, 3, 4}, 0.95) == 4.0);
  CHECK(empirical_quantile_higher({4, 3, 2, 1}, 0.0) == 1.0);
  CHECK(empirical_quantile_higher({1, 2, 3, 4}, 1.0) == 4.0);
  CHECK(empirical_quantile_higher({1, 2, 3, 4}, 0.5) == 3.0);  // ceil(0.5*3) = 2 -> third value
  CHECK(empirical_quantile_higher({7}, 0.3) == 7.0);
  CHECK_THROWS(empirical_quantile_higher({}, 0.5));
}

TEST_CASE("local threshold selection: strict inequality and order invariance") {
  PermutationNull null_dist;
  null_dist.rows.assign(20, {0.08, 0.08, 0.02});
  const std::vector<double> vip{0.10, 0.08, 0.5};
  const auto sel = local_threshold_select(vip, null_dist, 0.05, {"a", "b", "c"});
  CHECK(sel.selected == std::vector<bool>{true, false, true});
  CHECK(sel.threshold[0] == 0.08);
  CHECK(sel.selected_indices() == std::vector<int>{0, 2});

  // permuting columns permutes the decision with it
  PermutationNull swapped;
  swapped.rows.assign(20, {0.02, 0.08, 0.08});
  const std::vector<double> vip2{0.5, 0.08, 0.10};
  const auto sel2 = local_threshold_select(vip2, swapped, 0.05, {"c", "b", "a"});
  CHECK(sel2.selected == std::vector<bool>{true, false, true});
}

TEST_CASE("pi threshold rule and monotonicity") {
  CHECK(count_selected(60, 100, 0.5));
  CHECK_FALSE(count_selected(60, 100, 0.7));
  CHECK(count_selected(50, 100, 0.5));  // boundary: >= pi*B
  CHECK(count_selected(1, 1, 0.99));
  // monotone: selected at a larger pi implies selected at a smaller one
  for (int count = 0; count <= 10; ++count)
    for (double hi : {0.3, 0.6, 0.9})
      for (double lo : {0.1, 0.2})
        if (count_selected(count, 10, hi)) CHECK(count_selected(count, 10, lo));
}

TEST_CASE("build_null: shape, determinism, exchangeable noise") {
  auto ds = noise_data(400, 10, 4, 5);
  NullConfig cfg;
  cfg.permutations = 3;
  cfg.chain.draws = 300;
  cfg.chain.burn_in = 100;
  cfg.chain.m = 50;
  cfg.jobs = 2;
  const auto null_a = build_null(ds, cfg, 77);
  CHECK(null_a.permutations() == 3);
  for (const auto& row : null_a.rows) {
    CHECK(row.size() == 10);
    double total = 0.0;
    for (double v : row) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    // exchangeable noise predictors: VIP mass spreads near 1/L
    for (double v : row) CHECK(std::fabs(v - 0.1) < 0.05);
  }
  const auto null_b = build_null(ds, cfg, 77);
  CHECK(null_a.rows == null_b.rows);  // deterministic under one master seed

  NullConfig single = cfg;
  single.permutations = 1;
  CHECK(build_null(ds, single, 3).rows.size() == 1);
}

TEST_CASE("bootstrap aggregation reproduces its single replicate at B=1") {
  DgpConfig dgp;
  dgp.mode = DgpMode::VarSelect;
  dgp.n_clusters = 2;
  dgp.cluster_size = 60;
  dgp.seed = 6;
  auto ds = ampute(simulate_dataset(dgp).data, default_amputation_plan(), 7);

  BootstrapSelectConfig cfg;
  cfg.B = 1;
  cfg.pi = 0.5;
  cfg.alpha = 0.05;
  cfg.null_cfg.permutations = 2;
  cfg.null_cfg.chain.draws = 150;
  cfg.null_cfg.chain.burn_in = 50;
  cfg.null_cfg.chain.m = 25;
  cfg.impute.cycles = 3;
  const std::uint64_t seed = 11;
  const auto agg = aggregate_bootstrap_select(ds, cfg, seed);

  // replay the replicate's seed stream by hand
  const auto boot = bootstrap_resample(ds, Rng::derive(seed, 0).next_u64());
  ImputeConfig imp = cfg.impute;
  imp.seed = Rng::derive(seed, 1).next_u64();
  const auto completed = chained_impute(boot, imp);
  NullConfig null_cfg = cfg.null_cfg;
  null_cfg.jobs = 1;
  const auto direct = permutation_select(completed, null_cfg, cfg.alpha, Rng::derive(seed, 2).next_u64());

  CHECK(agg.boot_total == 1);
  for (std::size_t j = 0; j < agg.selected.size(); ++j) {
    CHECK(agg.boot_count[j] == (direct.selected[j] ? 1 : 0));
    CHECK(agg.selected[j] == direct.selected[j]);
  }
}

TEST_CASE("permutation selection separates a strong predictor from noise") {
  // log-time signal on x1 only; nine noise covariates
  auto ds = noise_data(400, 10, 4, 13);
  Rng rng(14);
  for (std::size_t i = 0; i < ds.n(); ++i) ds.y[i] = std::exp(1.5 * ds.X[0][i] + rng.normal(0.0, 0.4));

  NullConfig cfg;
  cfg.permutations = 8;
  cfg.chain.draws = 400;
  cfg.chain.burn_in = 150;
  cfg.chain.m = 50;
  cfg.jobs = 2;
  const auto sel = permutation_select(ds, cfg, 0.05, 15);
  CHECK(sel.names.size() == 10);
  CHECK(sel.selected[0]);
  int others = 0;
  for (std::size_t j = 1; j < 10; ++j) others += sel.selected[j] ? 1 : 0;
  CHECK(others <= 2);

  // the per-draw inclusion-proportion trace of the strong predictor settles
  ChainConfig chain = cfg.chain;
  chain.seed = 16;
  chain.keep_f = false;
  const auto draws = run_chain(ds, chain);
  std::vector<double> trace;
  for (const auto& v : draws.vip) trace.push_back(v[0]);
  const std::size_t tail = trace.size() / 2;
  double m = 0.0;
  for (std::size_t i = tail; i < trace.size(); ++i) m += trace[i];
  m /= static_cast<double>(trace.size() - tail);
  double sd = 0.0;
  for (std::size_t i = tail; i < trace.size(); ++i) sd += (trace[i] - m) * (trace[i] - m);
  sd = std::sqrt(sd / static_cast<double>(trace.size() - tail));
  CHECK(sd < 0.05);
  CHECK(m > 0.2);  // the signal covariate dominates the splits
}
