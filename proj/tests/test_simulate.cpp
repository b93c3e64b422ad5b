#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "riaft/simulate.hpp"

using namespace riaft;

TEST_CASE("covariate generators match their stated laws") {
  DgpConfig vs;
  vs.mode = DgpMode::VarSelect;
  vs.n_clusters = 10;
  vs.cluster_size = 10000;
  Rng rng(3);
  const auto X = gen_covariates(vs, rng);
  CHECK(X.size() == 28);
  // E[x5] = E[0.3 x2 - 0.2 x3] = 0.3 * 0.5 = 0.15
  CHECK(oracle::mean_of(X[4]) == doctest::Approx(0.15).epsilon(0.07));
  CHECK(oracle::mean_of(X[0]) == doctest::Approx(0.5).epsilon(0.03));
  CHECK(oracle::var_of(X[2]) == doctest::Approx(1.0).epsilon(0.05));

  DgpConfig het;
  het.mode = DgpMode::Heterogeneity;
  het.n_clusters = 10;
  het.cluster_size = 10000;
  Rng rng2(4);
  const auto H = gen_covariates(het, rng2);
  CHECK(H.size() == 7);
  double f0 = 0, f1 = 0, f2 = 0;
  for (double v : H[5]) {
    f0 += v == 0.0;
    f1 += v == 1.0;
    f2 += v == 2.0;
  }
  const double n = static_cast<double>(H[5].size());
  CHECK(f0 / n == doctest::Approx(0.3).epsilon(0.04));
  CHECK(f1 / n == doctest::Approx(0.3).epsilon(0.04));
  CHECK(f2 / n == doctest::Approx(0.4).epsilon(0.04));

  // determinism
  Rng rng3(3), rng4(3);
  DgpConfig small = vs;
  small.cluster_size = 50;
  CHECK(gen_covariates(small, rng3) == gen_covariates(small, rng4));
}

TEST_CASE("treatment assignment: softmax intercepts, simplex, arm ratios") {
  DgpConfig cfg;
  cfg.n_clusters = 4;
  cfg.cluster_size = 500;
  const std::size_t n = cfg.n();
  std::vector<int> cluster(n);
  for (std::size_t i = 0; i < n; ++i) cluster[i] = static_cast<int>(i / 500) + 1;

  // all-zero covariates and no intercept noise leave only (1.5, 0.7, 0)
  std::vector<std::vector<double>> X0(7, std::vector<double>(n, 0.0));
  DgpConfig no_tau = cfg;
  no_tau.treatment_intercept_sd = 0.0;
  Rng rng(5);
  const auto asg0 = assign_treatment(X0, cluster, no_tau, rng);
  const double e1 = std::exp(1.5), e2 = std::exp(0.7), s = e1 + e2 + 1.0;
  for (const auto& g : asg0.gps) {
    CHECK(g[0] == doctest::Approx(e1 / s).epsilon(1e-12));  // 0.59792
    CHECK(g[1] == doctest::Approx(e2 / s).epsilon(1e-12));  // 0.26866
    CHECK(g[2] == doctest::Approx(1.0 / s).epsilon(1e-12)); // 0.13341
    CHECK(g[0] + g[1] + g[2] == doctest::Approx(1.0).epsilon(1e-12));
  }

  // full model: frequencies near the designed 5:3:1 imbalance
  DgpConfig big;
  big.n_clusters = 10;
  big.cluster_size = 2000;
  Rng rng2(6);
  const auto Xb = gen_covariates(big, rng2);
  std::vector<int> cl(big.n());
  for (std::size_t i = 0; i < big.n(); ++i) cl[i] = static_cast<int>(i / 2000) + 1;
  const auto asg = assign_treatment(Xb, cl, big, rng2);
  std::array<double, 3> freq{0, 0, 0};
  for (int a : asg.labels) freq[static_cast<std::size_t>(a - 1)] += 1.0;
  for (auto& f : freq) f /= static_cast<double>(big.n());
  CHECK(freq[0] == doctest::Approx(5.0 / 9.0).epsilon(0.12));
  CHECK(freq[1] == doctest::Approx(3.0 / 9.0).epsilon(0.12));
  CHECK(std::fabs(freq[2] - 1.0 / 9.0) < 0.05);
  for (const auto& g : asg.gps) CHECK(g[0] + g[1] + g[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("survival times follow the Weibull inverse transform") {
  // q == 0, PH, lambda = 3000: E[log T] = (-gamma_E - log 3000)/2
  DgpConfig cfg;
  cfg.mode = DgpMode::VarSelect;
  cfg.noise_only = true;  // q(x, b) = b; with b forced to 0 below, q == 0
  cfg.n_clusters = 1;
  cfg.cluster_size = 1000000;
  Rng rng(9);
  std::vector<std::vector<double>> X(28, std::vector<double>(cfg.n(), 0.0));
  std::vector<int> cluster(cfg.n(), 1);
  const std::vector<double> b{0.0};
  const auto t = gen_survival_times(cfg, X, b, cluster, rng);
  std::vector<double> logt(cfg.n());
  for (std::size_t i = 0; i < cfg.n(); ++i) logt[i] = std::log(t[0][i]);
  const double euler = 0.57721566490153286;
  CHECK(oracle::mean_of(logt) == doctest::Approx((-euler - std::log(3000.0)) / 2.0).epsilon(0.002));

  // distributional check against the generator-implied survival function
  std::vector<double> sample(t[0].begin(), t[0].begin() + 100000);
  CHECK(oracle::ks_distance(sample, [](double u) { return 1.0 - true_survival_prob(3000.0, 0.0, 2.0, u); }) < 0.01);
}

TEST_CASE("censoring solver hits the target and is monotone") {
  Rng rng(10);
  std::vector<double> times(100000);
  for (auto& v : times) v = std::exp(rng.normal(0.0, 1.0));
  const double rate = solve_censoring_rate(times, 0.5);
  double achieved = 0.0;
  for (double t : times) achieved += 1.0 - std::exp(-rate * t);
  achieved /= static_cast<double>(times.size());
  CHECK(achieved == doctest::Approx(0.5).epsilon(1e-6));

  const double rate_small = solve_censoring_rate(times, 0.01);
  CHECK(rate_small < rate);
  CHECK(rate_small > 0.0);
  const double rate_large = solve_censoring_rate(times, 0.9);
  CHECK(rate_large > rate);
  CHECK_THROWS(solve_censoring_rate(times, 1.5));
}

TEST_CASE("simulated datasets: achieved censoring and counterfactual consistency") {
  for (DgpMode mode : {DgpMode::Heterogeneity, DgpMode::VarSelect}) {
    DgpConfig cfg;
    cfg.mode = mode;
    cfg.n_clusters = 10;
    cfg.cluster_size = 200;
    cfg.seed = 42;
    const auto sim = simulate_dataset(cfg);
    const auto rep = validate(sim.data);
    CHECK(std::fabs(rep.censoring_proportion - 0.5) < 0.04);
    if (mode == DgpMode::Heterogeneity) {
      CHECK(sim.data.n_arms == 3);
      for (std::size_t i = 0; i < sim.data.n(); ++i) {
        const int a = sim.data.treatment[i];
        CHECK(sim.truth.uncensored_t[i] == sim.truth.counterfactual_t[static_cast<std::size_t>(a - 1)][i]);
        CHECK(sim.data.y[i] <= sim.truth.uncensored_t[i]);
      }
      CHECK(sim.data.column_types[5] == ColumnType::Categorical);
    } else {
      CHECK(sim.data.n_covariates() == 28);
    }
  }
  // determinism
  DgpConfig cfg;
  cfg.seed = 7;
  cfg.n_clusters = 3;
  cfg.cluster_size = 20;
  const auto a = simulate_dataset(cfg);
  const auto b = simulate_dataset(cfg);
  CHECK(a.data.y == b.data.y);
  CHECK(a.truth.b == b.truth.b);
}

TEST_CASE("closed-form effect oracle agrees with shared-uniform coupling") {
  DgpConfig cfg;
  cfg.n_clusters = 5;
  cfg.cluster_size = 400;
  Rng rng(12);
  const auto X = gen_covariates(cfg, rng);
  std::vector<int> cluster(cfg.n());
  for (std::size_t i = 0; i < cfg.n(); ++i) cluster[i] = static_cast<int>(i / 400) + 1;
  std::vector<double> b(5);
  for (auto& v : b) v = rng.normal(0.0, 4.0);

  const auto t = gen_survival_times(cfg, X, b, cluster, rng);
  const auto zeta = true_iste_oracle(cfg, X, b, cluster, 1, 2);
  // the shared uniform cancels in log T(1) - log T(2), so the difference is
  // exactly the oracle value row by row
  for (std::size_t i = 0; i < cfg.n(); ++i)
    CHECK(std::log(t[0][i]) - std::log(t[1][i]) == doctest::Approx(zeta[i]).epsilon(1e-9));

  // identical arms: a pair with itself is exactly zero
  for (double z : true_iste_oracle(cfg, X, b, cluster, 2, 2)) CHECK(z == 0.0);

  // nPH: per-row shape exp(0.7 + 0.5 x1) scales the effect
  DgpConfig nph = cfg;
  nph.hazard = HazardType::NPH;
  const auto zeta_nph = true_iste_oracle(nph, X, b, cluster, 1, 2);
  for (std::size_t i : {std::size_t{0}, std::size_t{123}, std::size_t{999}}) {
    const double eta = std::exp(0.7 + 0.5 * X[0][i]);
    CHECK(zeta_nph[i] == doctest::Approx(zeta[i] * 2.0 / eta).epsilon(1e-9));
  }
}

TEST_CASE("Weibull survival functionals") {
  // S(t) at q=0, eta=2, lambda=0.1: exp(-lambda t^2)
  CHECK(true_survival_prob(0.1, 0.0, 2.0, 3.0) == doctest::Approx(std::exp(-0.9)).epsilon(1e-12));
  CHECK(true_survival_prob(0.1, 0.0, 2.0, 0.0) == 1.0);
  // RMST -> t* when survival ~ 1 on the horizon
  CHECK(true_rmst(1e-6, 0.0, 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
  // quadrature against a dense Riemann sum
  double riemann = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    const double u = (i + 0.5) * 2.0 / N;
    riemann += true_survival_prob(0.4, 0.3, 2.0, u) * (2.0 / N);
  }
  CHECK(true_rmst(0.4, 0.3, 2.0, 2.0) == doctest::Approx(riemann).epsilon(1e-6));
}
