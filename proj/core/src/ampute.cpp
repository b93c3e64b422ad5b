#include "riaft/ampute.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "riaft/rng.hpp"

namespace riaft {

namespace {

double eval_wss(const std::vector<WssTerm>& terms, const SurvivalDataset& ds, std::size_t row) {
  double s = 0.0;
  for (const auto& t : terms) {
    double v = t.coef * ds.X[static_cast<std::size_t>(t.var1)][row];
    if (t.var2 >= 0) v *= ds.X[static_cast<std::size_t>(t.var2)][row];
    s += v;
  }
  return s;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void AmputationPlan::check(const SurvivalDataset& ds) const {
  double total = 0.0;
  for (const auto& s : subsamples) {
    total += s.proportion;
    for (int t : s.targets)
      if (t < 0 || static_cast<std::size_t>(t) >= ds.n_covariates())
        throw std::invalid_argument("AmputationPlan: target column out of range");
    for (const auto& w : s.wss) {
      if (w.var1 < 0 || static_cast<std::size_t>(w.var1) >= ds.n_covariates() ||
          (w.var2 >= 0 && static_cast<std::size_t>(w.var2) >= ds.n_covariates()))
        throw std::invalid_argument("AmputationPlan: wss column out of range");
      for (int t : s.targets)
        if (w.var1 == t || w.var2 == t)
          throw std::invalid_argument("AmputationPlan: wss references an amputated column");
    }
  }
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("AmputationPlan: proportions must sum to 1");
}

AmputationPlan default_amputation_plan() {
  // 0-based covariate indices: x3=2, x4=3, x5=4, x6=5, x7=6, x8=7
  AmputationPlan plan;
  plan.quota = 0.40;
  plan.subsamples = {
      {.30, {4}, {{1, 2, -1}, {1, 3, -1}, {1, 2, 3}}, false},                       // wss = x3 + x4 + x3*x4
      {.09, {5}, {{1, 2, -1}, {1, 3, -1}, {1, 4, -1}, {1, 4, 4}, {1, 2, 3}}, false},// x3 + x4 + x5 + x5^2 + x3*x4
      {.09, {6}, {{1, 3, -1}, {1, 4, -1}, {1, 5, -1}, {1, 5, 5}, {1, 3, 4}}, false},// x4 + x5 + x6 + x6^2 + x4*x5
      {.08, {7}, {{1, 4, -1}, {1, 5, -1}, {1, 6, -1}, {1, 5, 6}}, false},           // x5 + x6 + x7 + x6*x7
      {.08, {4, 5}, {{1, 2, -1}, {1, 3, -1}}, false},                               // x3 + x4
      {.16, {5, 6}, {{1, 4, -1}}, true},                                            // x5
      {.10, {6, 7}, {{1, 3, -1}, {1, 4, -1}, {0.5, 3, 4}}, true},                   // x4 + x5 + 0.5*x4*x5
      {.10, {5, 7}, {{1, 2, -1}, {1, 3, -1}, {1, 2, 3}}, true},                     // x3 + x4 + x3*x4
  };
  return plan;
}

SurvivalDataset ampute(const SurvivalDataset& ds, const AmputationPlan& plan, std::uint64_t seed) {
  plan.check(ds);
  for (const auto& s : plan.subsamples)
    for (int t : s.targets)
      for (auto b : ds.mask.cols[static_cast<std::size_t>(t)])
        if (b) throw std::invalid_argument("ampute: plan columns must be fully observed");

  SurvivalDataset out = ds;
  if (plan.quota <= 0.0) return out;

  Rng rng(seed);
  const std::size_t n = ds.n();
  auto perm = rng.permutation(static_cast<int>(n));

  double cum = 0.0;
  std::size_t start = 0;
  for (std::size_t s = 0; s < plan.subsamples.size(); ++s) {
    const auto& sub = plan.subsamples[s];
    cum += sub.proportion;
    const std::size_t stop =
        s + 1 == plan.subsamples.size() ? n : static_cast<std::size_t>(std::llround(cum * static_cast<double>(n)));
    if (stop <= start) throw std::runtime_error("ampute: empty subsample " + std::to_string(s + 1));
    const std::size_t ns = stop - start;

    std::vector<double> w(ns);
    double mean = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      w[i] = eval_wss(sub.wss, ds, static_cast<std::size_t>(perm[start + i]));
      mean += w[i];
    }
    mean /= static_cast<double>(ns);
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(ns));
    for (double& v : w) {
      v = sd > 0.0 ? (v - mean) / sd : 0.0;
      if (sub.both_tailed) v = std::fabs(v);
    }

    // shift so the expected masked fraction matches the quota
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double p = 0.0;
      for (double v : w) p += logistic(mid + v);
      if (p / static_cast<double>(ns) < plan.quota)
        lo = mid;
      else
        hi = mid;
    }
    const double shift = 0.5 * (lo + hi);

    for (std::size_t i = 0; i < ns; ++i) {
      if (rng.uniform() >= logistic(shift + w[i])) continue;
      const std::size_t row = static_cast<std::size_t>(perm[start + i]);
      for (int t : sub.targets) out.mask.set(row, static_cast<std::size_t>(t), true);
    }
    start = stop;
  }
  return out;
}

}  // namespace riaft
