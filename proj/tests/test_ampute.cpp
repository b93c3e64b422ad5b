#include <doctest.h>

#include <cmath>

#include "riaft/ampute.hpp"
#include "riaft/simulate.hpp"

using namespace riaft;

namespace {

SurvivalDataset vs_data(std::uint64_t seed, int K = 10, int nk = 200) {
  DgpConfig cfg;
  cfg.mode = DgpMode::VarSelect;
  cfg.n_clusters = K;
  cfg.cluster_size = nk;
  cfg.seed = seed;
  return simulate_dataset(cfg).data;
}

}  // namespace

TEST_CASE("zero quota leaves the data complete") {
  const auto ds = vs_data(1);
  AmputationPlan plan = default_amputation_plan();
  plan.quota = 0.0;
  const auto out = ampute(ds, plan, 2);
  CHECK_FALSE(out.mask.any());
  CHECK(out.X == ds.X);
}

TEST_CASE("default plan reproduces the target missingness pattern") {
  const auto ds = vs_data(3);
  const auto out = ampute(ds, default_amputation_plan(), 4);

  // outcomes and design are untouched; only the mask changes
  CHECK(out.y == ds.y);
  CHECK(out.delta == ds.delta);
  CHECK(out.cluster == ds.cluster);
  CHECK(out.X == ds.X);

  const auto rep = validate(out);
  CHECK(std::fabs(rep.incomplete_row_proportion - 0.40) < 0.05);
  const double expect[4] = {0.152, 0.172, 0.140, 0.112};
  for (int j = 0; j < 4; ++j) {
    const double got = rep.columns[static_cast<std::size_t>(4 + j)].missing_proportion;
    CHECK(std::fabs(got - expect[j]) < 0.04);
  }
  // no other column is ever touched
  for (std::size_t j = 0; j < out.n_covariates(); ++j) {
    if (j >= 4 && j <= 7) continue;
    CHECK(rep.columns[j].missing_proportion == 0.0);
  }
}

TEST_CASE("right-tailed missingness concentrates on high scores") {
  const auto ds = vs_data(5, 5, 200);
  AmputationPlan plan;
  plan.quota = 0.4;
  plan.subsamples = {{1.0, {4}, {{1, 2, -1}, {1, 3, -1}, {1, 2, 3}}, false}};
  const auto out = ampute(ds, plan, 6);
  double wss_missing = 0.0, wss_observed = 0.0, n_missing = 0.0, n_observed = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double w = ds.X[2][i] + ds.X[3][i] + ds.X[2][i] * ds.X[3][i];
    if (out.mask.at(i, 4)) {
      wss_missing += w;
      n_missing += 1.0;
    } else {
      wss_observed += w;
      n_observed += 1.0;
    }
  }
  CHECK(n_missing > 0);
  CHECK(wss_missing / n_missing > wss_observed / n_observed);
}

TEST_CASE("plan validation and empty subsamples") {
  const auto ds = vs_data(7, 2, 50);
  AmputationPlan bad = default_amputation_plan();
  bad.subsamples[0].wss.push_back({1.0, 4, -1});  // wss references its own target
  CHECK_THROWS(ampute(ds, bad, 1));

  AmputationPlan unbalanced = default_amputation_plan();
  unbalanced.subsamples[0].proportion = 0.5;  // no longer sums to 1
  CHECK_THROWS(ampute(ds, unbalanced, 1));

  // 8 subsamples over 10 rows: at least one is empty
  const auto tiny = vs_data(8, 1, 10);
  CHECK_THROWS(ampute(tiny, default_amputation_plan(), 2));

  // amputation requires the plan columns to be fully observed
  auto already = ampute(ds, default_amputation_plan(), 3);
  CHECK_THROWS(ampute(already, default_amputation_plan(), 4));
}

TEST_CASE("determinism") {
  const auto ds = vs_data(9);
  const auto a = ampute(ds, default_amputation_plan(), 11);
  const auto b = ampute(ds, default_amputation_plan(), 11);
  CHECK(a.mask.cols == b.mask.cols);
}
