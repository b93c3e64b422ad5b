#include "riaft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riaft {

double metric_pehe(const std::vector<double>& est, const std::vector<double>& truth) {
  if (est.size() != truth.size() || est.empty()) throw std::invalid_argument("metric_pehe: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double e = est[i] - truth[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(est.size()));
}

const std::vector<GpsSubclass>& default_gps_subclasses() {
  static const std::vector<GpsSubclass> table = {
      {0.0, 0.1, 0.0, 1.0},                                                                          // 1
      {0.0, 0.2, 0.0, 0.25},  {0.0, 0.2, 0.25, 0.5},  {0.0, 0.2, 0.5, 0.75},  {0.0, 0.2, 0.75, 1.0}, // 2-5
      {0.2, 0.4, 0.0, 0.2},   {0.2, 0.4, 0.2, 0.4},   {0.2, 0.4, 0.4, 0.6},   {0.2, 0.4, 0.6, 0.8},
      {0.2, 0.4, 0.8, 1.0},                                                                          // 6-10
      {0.4, 0.5, 0.0, 0.1},   {0.4, 0.5, 0.1, 0.3},   {0.4, 0.5, 0.3, 0.4},   {0.4, 0.5, 0.4, 0.5},
      {0.4, 0.5, 0.5, 0.6},   {0.4, 0.5, 0.6, 0.7},   {0.4, 0.5, 0.7, 1.0},                          // 11-17
      {0.5, 0.6, 0.0, 0.2},   {0.5, 0.6, 0.2, 0.3},   {0.5, 0.6, 0.3, 0.4},   {0.5, 0.6, 0.4, 0.5},
      {0.5, 0.6, 0.5, 0.6},   {0.5, 0.6, 0.6, 0.7},   {0.5, 0.6, 0.7, 0.8},   {0.5, 0.6, 0.8, 1.0},  // 18-25
      {0.6, 0.7, 0.0, 0.3},   {0.6, 0.7, 0.3, 0.5},   {0.6, 0.7, 0.5, 0.6},   {0.6, 0.7, 0.6, 0.7},
      {0.6, 0.7, 0.7, 1.0},                                                                          // 26-30
      {0.7, 0.8, 0.0, 0.3},   {0.7, 0.8, 0.3, 0.5},   {0.7, 0.8, 0.5, 0.7},   {0.7, 0.8, 0.7, 1.0},  // 31-34
      {0.8, 0.9, 0.0, 0.4},   {0.8, 0.9, 0.4, 0.6},   {0.8, 0.9, 0.6, 1.0},                          // 35-37
      {0.9, 1.0, 0.0, 0.4},   {0.9, 1.0, 0.4, 0.6},   {0.9, 1.0, 0.6, 1.0},                          // 38-40
  };
  return table;
}

int assign_gps_subclass(double g1, double g2, const std::vector<GpsSubclass>& table) {
  for (std::size_t s = 0; s < table.size(); ++s) {
    const auto& t = table[s];
    if (g1 > t.g1_lo && g1 <= t.g1_hi && g2 > t.g2_lo && g2 <= t.g2_hi) return static_cast<int>(s) + 1;
  }
  return -1;
}

std::vector<SubclassStat> metric_bias_rmse_by_gps(const std::vector<double>& est, const std::vector<double>& truth,
                                                  const std::vector<std::array<double, 3>>& gps,
                                                  const std::vector<GpsSubclass>& table) {
  if (est.size() != truth.size() || est.size() != gps.size())
    throw std::invalid_argument("metric_bias_rmse_by_gps: length mismatch");
  std::vector<SubclassStat> out(table.size());
  std::vector<double> sum_est(table.size(), 0.0), sum_truth(table.size(), 0.0);
  std::vector<std::size_t> cnt(table.size(), 0);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const int s = assign_gps_subclass(gps[i][0], gps[i][1], table);
    if (s < 1) throw std::runtime_error("metric_bias_rmse_by_gps: point escaped the subclass table");
    sum_est[static_cast<std::size_t>(s - 1)] += est[i];
    sum_truth[static_cast<std::size_t>(s - 1)] += truth[i];
    cnt[static_cast<std::size_t>(s - 1)]++;
  }
  for (std::size_t s = 0; s < table.size(); ++s) {
    auto& st = out[s];
    st.subclass = static_cast<int>(s) + 1;
    st.count = cnt[s];
    st.present = cnt[s] > 0;
    if (!st.present) continue;
    st.mean_est = sum_est[s] / static_cast<double>(cnt[s]);
    st.mean_truth = sum_truth[s] / static_cast<double>(cnt[s]);
    const double diff = st.mean_est - st.mean_truth;
    if (std::fabs(st.mean_truth) >= 1e-8) {
      st.bias = diff / std::fabs(st.mean_truth);
    } else {
      st.bias = diff;
      st.absolute_bias = true;
    }
    st.squared_error = diff * diff;
  }
  return out;
}

SelectionMetrics metric_selection(const std::vector<int>& selected, const std::vector<int>& useful,
                                  const std::vector<int>& noise) {
  auto contains = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  double tp = 0, fp = 0, fn = 0;
  for (int s : selected) {
    if (contains(useful, s))
      tp += 1;
    else if (contains(noise, s))
      fp += 1;
  }
  for (int u : useful)
    if (!contains(selected, u)) fn += 1;
  SelectionMetrics m;
  if (tp + fp > 0) {
    m.precision = tp / (tp + fp);
    m.precision_defined = true;
  }
  m.recall = useful.empty() ? 0.0 : tp / (tp + fn);
  m.f1 = (m.precision_defined && m.precision + m.recall > 0.0)
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.type1 = noise.empty() ? 0.0 : fp / static_cast<double>(noise.size());
  return m;
}

double metric_concordance(const std::vector<double>& pred_survival, const std::vector<double>& y,
                          const std::vector<int>& delta) {
  if (pred_survival.size() != y.size() || y.size() != delta.size())
    throw std::invalid_argument("metric_concordance: length mismatch");
  const std::size_t n = y.size();
  double comparable = 0.0, score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      // i is the earlier failure; requires an observed event at the smaller time
      if (!(y[i] < y[j]) || delta[i] != 1) continue;
      comparable += 1.0;
      if (pred_survival[i] < pred_survival[j])
        score += 1.0;
      else if (pred_survival[i] == pred_survival[j])
        score += 0.5;
    }
  }
  if (comparable == 0.0) throw std::runtime_error("metric_concordance: no comparable pairs");
  return score / comparable;
}

}  // namespace riaft
