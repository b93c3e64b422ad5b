#include <doctest.h>

#include <cmath>

#include "riaft/metrics.hpp"
#include "riaft/rng.hpp"
#include "riaft/simulate.hpp"

using namespace riaft;

TEST_CASE("pehe identities") {
  const std::vector<double> t{0.5, -1.0, 2.0};
  CHECK(metric_pehe(t, t) == 0.0);
  std::vector<double> shifted(t);
  for (double& v : shifted) v += 1.0;
  CHECK(metric_pehe(shifted, t) == doctest::Approx(1.0));
  std::vector<double> down(t);
  for (double& v : down) v -= 1.0;
  CHECK(metric_pehe(down, t) == doctest::Approx(1.0));  // symmetric in error sign
  CHECK_THROWS(metric_pehe({1.0}, t));
}

TEST_CASE("selection metric arithmetic") {
  // TP=8, FP=2, FN=0
  std::vector<int> useful, noise;
  for (int j = 0; j < 8; ++j) useful.push_back(j);
  for (int j = 8; j < 28; ++j) noise.push_back(j);
  std::vector<int> selected;
  for (int j = 0; j < 8; ++j) selected.push_back(j);
  selected.push_back(9);
  selected.push_back(10);
  const auto m = metric_selection(selected, useful, noise);
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(1.0));
  CHECK(m.f1 == doctest::Approx(2.0 * 0.8 / 1.8));
  CHECK(m.type1 == doctest::Approx(2.0 / 20.0));

  const auto perfect = metric_selection(useful, useful, noise);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.type1 == 0.0);

  const auto empty = metric_selection({}, useful, noise);
  CHECK_FALSE(empty.precision_defined);
  CHECK(empty.f1 == 0.0);
}

TEST_CASE("concordance endpoints") {
  // perfect ranking of uncensored times: higher survival prob = longer time
  const std::vector<double> y{1, 2, 3, 4, 5};
  const std::vector<int> delta{1, 1, 1, 1, 1};
  const std::vector<double> good{0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(metric_concordance(good, y, delta) == 1.0);
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3, 0.3};
  CHECK(metric_concordance(flat, y, delta) == 0.5);

  // random predictions hover at one half
  Rng rng(5);
  const std::size_t n = 1000;
  std::vector<double> yy(n), pp(n);
  std::vector<int> dd(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    yy[i] = rng.uniform();
    pp[i] = rng.uniform();
  }
  CHECK(std::fabs(metric_concordance(pp, yy, dd) - 0.5) < 0.03);

  // censored smaller time is not comparable
  const std::vector<double> y2{1, 2};
  const std::vector<int> d2{0, 1};
  CHECK_THROWS(metric_concordance({0.5, 0.6}, y2, d2));
}

TEST_CASE("gps subclass table partitions the simplex") {
  const auto& table = default_gps_subclasses();
  CHECK(table.size() == 40);

  Rng rng(7);
  for (int i = 0; i < 20000; ++i) {
    // random point on the 3-simplex interior
    double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    const double s = a + b + c;
    a /= s;
    b /= s;
    const int first = assign_gps_subclass(a, b, table);
    CHECK(first >= 1);
    // first-match assignment is a function, hence disjoint by construction;
    // verify the remaining rows never leave a point unmatched
  }
}

TEST_CASE("subclass occupancy on one simulated replication") {
  DgpConfig cfg;
  cfg.n_clusters = 10;
  cfg.cluster_size = 200;
  cfg.seed = 31;
  const auto sim = simulate_dataset(cfg);
  std::vector<std::size_t> counts(40, 0);
  for (const auto& g : sim.truth.assignment.gps) {
    const int s = assign_gps_subclass(g[0], g[1], default_gps_subclasses());
    REQUIRE(s >= 1);
    counts[static_cast<std::size_t>(s - 1)]++;
  }
  std::size_t total = 0;
  for (auto c : counts) total += c;
  CHECK(total == 2000);  // exhaustive and disjoint
  // low-propensity corner is populated at the scale of tens of individuals
  CHECK(counts[0] >= 5);
  CHECK(counts[0] <= 150);
}

TEST_CASE("bias/rmse by subclass") {
  DgpConfig cfg;
  cfg.n_clusters = 5;
  cfg.cluster_size = 100;
  cfg.seed = 33;
  const auto sim = simulate_dataset(cfg);
  const auto truth = true_iste_oracle(cfg, sim.data.X, sim.truth.b, sim.data.cluster, 1, 2);

  const auto exact = metric_bias_rmse_by_gps(truth, truth, sim.truth.assignment.gps);
  std::size_t covered = 0;
  for (const auto& st : exact) {
    if (!st.present) continue;
    covered += st.count;
    CHECK(st.bias == doctest::Approx(0.0));
    CHECK(st.squared_error == doctest::Approx(0.0));
  }
  CHECK(covered == sim.data.n());

  std::vector<double> biased(truth);
  for (double& v : biased) v += 0.5;
  const auto off = metric_bias_rmse_by_gps(biased, truth, sim.truth.assignment.gps);
  for (const auto& st : off)
    if (st.present) CHECK(st.mean_est - st.mean_truth == doctest::Approx(0.5).epsilon(1e-9));
}
