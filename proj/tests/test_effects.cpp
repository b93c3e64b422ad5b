#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "riaft/effects.hpp"
#include "riaft/simulate.hpp"
#include "riaft/special.hpp"

using namespace riaft;

namespace {

struct Fitted {
  SurvivalDataset data;
  PosteriorDraws draws;
};

// small three-arm fit shared by the counterfactual tests
const Fitted& small_fit() {
  static const Fitted fitted = [] {
    DgpConfig cfg;
    cfg.mode = DgpMode::Heterogeneity;
    cfg.n_clusters = 2;
    cfg.cluster_size = 40;
    cfg.censoring_target = 0.3;
    cfg.seed = 21;
    SimResult sim = simulate_dataset(cfg);
    ChainConfig chain;
    chain.draws = 120;
    chain.burn_in = 40;
    chain.m = 25;
    chain.seed = 5;
    chain.keep_forests = true;
    chain.keep_f = true;
    return Fitted{sim.data, run_chain(sim.data, chain)};
  }();
  return fitted;
}

PosteriorDraws manual_draws(std::vector<double> f_b, std::vector<double> sigma2) {
  PosteriorDraws d;
  d.n_rows = 1;
  d.n_clusters = 1;
  d.centering.mu_aft = 0.0;
  for (std::size_t i = 0; i < f_b.size(); ++i) {
    d.iteration.push_back(static_cast<int>(i) + 1);
    d.b.push_back({f_b[i]});
    d.tau2.push_back(1.0);
    d.alpha.push_back(1.0);
    d.sigma2.push_back(sigma2[i]);
    d.vip.push_back({1.0});
  }
  return d;
}

}  // namespace

TEST_CASE("iste: same arm is zero, swapped arms negate") {
  const auto& fit = small_fit();
  const auto same = estimate_iste(fit.draws, fit.data, 2, 2);
  for (const auto& d : same.draws)
    for (double v : d) CHECK(v == 0.0);

  const auto ab = estimate_iste(fit.draws, fit.data, 1, 2);
  const auto ba = estimate_iste(fit.draws, fit.data, 2, 1);
  for (std::size_t d = 0; d < ab.draws.size(); ++d)
    for (std::size_t i = 0; i < ab.draws[d].size(); ++i) CHECK(ab.draws[d][i] == -ba.draws[d][i]);

  for (std::size_t i = 0; i < ab.n_rows(); ++i) {
    CHECK(ab.lower[i] <= ab.mean[i]);
    CHECK(ab.mean[i] <= ab.upper[i]);
  }
}

TEST_CASE("ate: exact consistency with iste means, constant case") {
  const auto& fit = small_fit();
  const auto iste = estimate_iste(fit.draws, fit.data, 1, 3);
  const auto ate = estimate_ate(iste);
  double m = 0.0;
  for (double v : iste.mean) m += v;
  m /= static_cast<double>(iste.n_rows());
  CHECK(ate.summary.mean == m);  // exact by construction
  CHECK(ate.summary.lower <= ate.summary.mean);
  CHECK(ate.summary.mean <= ate.summary.upper);

  IsteEstimate constant;
  constant.draws = {{2.5, 2.5, 2.5}, {2.5, 2.5, 2.5}};
  constant.refresh_summaries();
  const auto cate = estimate_ate(constant);
  CHECK(cate.summary.mean == doctest::Approx(2.5));
  CHECK(cate.summary.upper - cate.summary.lower == doctest::Approx(0.0));
  CHECK(estimate_ate(constant).per_draw == std::vector<double>{2.5, 2.5});
}

TEST_CASE("survival probability draws: closed-form anchors") {
  // one draw with f + b = 1.0, sigma = 1: S(e^1) = 0.5 exactly
  auto d = manual_draws({0.7}, {1.0});
  const std::vector<double> f_row{0.3};
  const auto s_med = survival_prob_draws(d, f_row, 1, std::exp(1.0));
  CHECK(s_med[0] == doctest::Approx(0.5).epsilon(1e-12));

  // t -> 0+ gives survival ~ 1; monotone nonincreasing in t, within [0,1]
  double prev = 2.0;
  for (double t : {1e-12, 0.01, 0.1, 1.0, 3.0, 10.0, 1000.0}) {
    const double s = survival_prob_draws(d, f_row, 1, t)[0];
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(s <= prev);
    prev = s;
  }
  CHECK(survival_prob_draws(d, f_row, 1, 1e-12)[0] == doctest::Approx(1.0));

  // against an empirical curve of simulated log-normal survival times
  Rng rng(3);
  const int n = 100000;
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    double emp = 0.0;
    Rng r2(static_cast<std::uint64_t>(t * 100));
    for (int i = 0; i < n; ++i) emp += std::exp(r2.normal(1.0, 1.0)) > t ? 1.0 : 0.0;
    emp /= n;
    CHECK(std::fabs(survival_prob_draws(d, f_row, 1, t)[0] - emp) < 0.01);
  }
}

TEST_CASE("rmst draws: limits, monotonicity, Riemann oracle") {
  // survival ~ 1 over the horizon when the location is far above log t*
  auto high = manual_draws({20.0}, {1.0});
  CHECK(rmst_draws(high, {0.0}, 1, 5.0)[0] == doctest::Approx(5.0).epsilon(1e-6));

  auto d = manual_draws({0.0}, {1.0});
  double prev = 0.0;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const double r = rmst_draws(d, {0.0}, 1, t)[0];
    CHECK(r >= prev);
    prev = r;
  }

  // brute-force Riemann sum of 1 - Phi(log u) on (0, 1]
  const int N = 1000000;
  double riemann = 0.0;
  for (int i = 0; i < N; ++i) {
    const double u = (i + 0.5) / N;
    riemann += normal_sf(std::log(u)) / N;
  }
  CHECK(rmst_draws(d, {0.0}, 1, 1.0)[0] == doctest::Approx(riemann).epsilon(1e-5));
}

TEST_CASE("pooling imputation runs") {
  IsteEstimate run1, run2;
  run1.draws = {{1.0, 1.0}, {1.0, 1.0}};
  run2.draws = {{3.0, 3.0}, {3.0, 3.0}};
  run1.refresh_summaries();
  run2.refresh_summaries();

  const auto single = pool_iste({run1});
  CHECK(single.draws == run1.draws);

  const auto pooled = pool_iste({run1, run2});
  CHECK(pooled.n_draws() == 4);
  CHECK(pooled.mean[0] == doctest::Approx(2.0));
  // between-run spread widens the pooled interval beyond the within-run ones
  const double w1 = run1.upper[0] - run1.lower[0];
  const double w2 = run2.upper[0] - run2.lower[0];
  CHECK(pooled.upper[0] - pooled.lower[0] >= 0.5 * (w1 + w2));

  // PosteriorDraws pooling with differing centering offsets
  const auto& fit = small_fit();
  PosteriorDraws shifted = fit.draws;
  shifted.centering.mu_aft += 1.0;
  const auto both = pool_imputations({fit.draws, shifted});
  CHECK(both.n_kept() == 2 * fit.draws.n_kept());
  const PredictorMatrix X = PredictorMatrix::from_dataset(fit.data, true);
  const auto pred_all = predict_posterior(both, X);
  const auto pred_1 = predict_posterior(fit.draws, X);
  const auto pred_2 = predict_posterior(shifted, X);
  for (std::size_t d = 0; d < pred_1.size(); ++d) {
    CHECK(pred_all[d] == pred_1[d]);
    CHECK(pred_all[pred_1.size() + d] == pred_2[d]);
  }

  PosteriorDraws misaligned = fit.draws;
  misaligned.n_rows += 1;
  CHECK_THROWS(pool_imputations({fit.draws, misaligned}));
}

TEST_CASE("random forest fits a step function") {
  Rng rng(31);
  const std::size_t n = 400;
  std::vector<double> x1(n), x2(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.uniform();
    x2[i] = rng.uniform();
    y[i] = x1[i] <= 0.5 ? -1.0 : 2.0;
  }
  PredictorMatrix X({x1, x2}, {{"x1", ColumnType::Continuous, 0}, {"x2", ColumnType::Continuous, 0}});
  RandomForestModel::Config cfg;
  cfg.n_trees = 50;
  const auto rf = RandomForestModel::fit(X, y, {0, 1}, cfg, rng);
  CHECK(rf.r2() > 0.9);
  const auto pred = rf.predict(X);
  double sse = 0.0;
  std::size_t close = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sse += (pred[i] - y[i]) * (pred[i] - y[i]);
    close += std::fabs(pred[i] - y[i]) < 0.5 ? 1 : 0;
  }
  CHECK(std::sqrt(sse / static_cast<double>(n)) < 0.4);
  CHECK(close >= n * 9 / 10);  // bagged trees blur only the step boundary
}

TEST_CASE("fit_the_fit: degenerate outcome, threshold semantics, driver recovery") {
  Rng rng(37);
  const std::size_t n = 300;
  std::vector<std::vector<double>> cols(10, std::vector<double>(n));
  std::vector<PredictorColumn> schema;
  for (std::size_t j = 0; j < 10; ++j) {
    for (auto& v : cols[j]) v = rng.normal();
    schema.push_back({"x" + std::to_string(j + 1), ColumnType::Continuous, 0});
  }
  const PredictorMatrix X(cols, schema);

  // constant outcome: nothing selected
  FitTheFitConfig cfg;
  cfg.rf.n_trees = 50;
  const auto none = fit_the_fit(std::vector<double>(n, 1.7), X, cfg);
  CHECK(none.selected.empty());

  // outcome driven by x3 alone
  std::vector<double> zeta(n);
  for (std::size_t i = 0; i < n; ++i) zeta[i] = std::sin(2.0 * cols[2][i]) + 0.05 * rng.normal();

  int first_is_x3 = 0;
  const int runs = 10;
  for (int s = 0; s < runs; ++s) {
    FitTheFitConfig c2 = cfg;
    c2.seed = static_cast<std::uint64_t>(s);
    const auto r = fit_the_fit(zeta, X, c2);
    REQUIRE(!r.selected.empty());
    if (r.selected.front() == 2) ++first_is_x3;
  }
  CHECK(first_is_x3 >= 9);

  // improvement threshold of 100% stops after the first covariate
  FitTheFitConfig strict = cfg;
  strict.improvement_threshold = 1.0;
  const auto one = fit_the_fit(zeta, X, strict);
  CHECK(one.selected.size() == 1);
}

TEST_CASE("extract_rules: step pattern, partition, min-leaf fallback") {
  Rng rng(41);
  const std::size_t n = 300;
  std::vector<double> x1(n), x2(n), zeta(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.uniform();
    x2[i] = rng.uniform();
    zeta[i] = x1[i] <= 0.5 ? -1.0 : 2.0;
  }
  PredictorMatrix X({x1, x2}, {{"x1", ColumnType::Continuous, 0}, {"x2", ColumnType::Continuous, 0}});
  IsteEstimate iste;
  iste.draws = {zeta, zeta};
  iste.refresh_summaries();

  FitTheFitConfig cfg;
  cfg.rf.n_trees = 50;
  const auto fit = fit_the_fit(zeta, X, cfg);
  REQUIRE(!fit.selected.empty());
  CHECK(fit.selected.front() == 0);

  // a forest whose prediction is an exact two-level step summarizes to two rules
  Rng rf_rng(7);
  RandomForestModel::Config step_cfg;
  step_cfg.n_trees = 1;
  step_cfg.max_depth = 1;
  step_cfg.mtry = 2;
  const auto step_rf = RandomForestModel::fit(X, zeta, {0, 1}, step_cfg, rf_rng);
  const auto rules = extract_rules(step_rf, X, iste);
  CHECK(rules.size() == 2);
  std::size_t covered = 0;
  for (const auto& rule : rules) {
    covered += rule.members.size();
    REQUIRE(rule.conditions.size() == 1);
    CHECK(rule.conditions[0].var == 0);
    // the two leaves carry the two step levels
    CHECK((std::fabs(rule.effect - (-1.0)) < 0.2 || std::fabs(rule.effect - 2.0) < 0.2));
    CHECK(rule.lower <= rule.effect);
    CHECK(rule.effect <= rule.upper);
  }
  CHECK(covered == n);

  // fewer members than min leaf: a single all-sample rule
  ExtractRulesConfig shallow;
  shallow.min_leaf = static_cast<int>(n);
  const auto one = extract_rules(fit.model, X, iste, shallow);
  CHECK(one.size() == 1);
  CHECK(one[0].members.size() == n);
}
