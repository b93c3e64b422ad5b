#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace riaft {

// Root mean squared error of individual effect estimates against the truth.
double metric_pehe(const std::vector<double>& est, const std::vector<double>& truth);

// Generalized-propensity-score subclass: half-open intervals (lo, hi] on the
// scores for treatments 1 and 2. Assignment is first match in table order.
struct GpsSubclass {
  double g1_lo, g1_hi, g2_lo, g2_hi;
};

// The 40-subclass partition used by the subgroup bias/RMSE evaluation.
const std::vector<GpsSubclass>& default_gps_subclasses();

int assign_gps_subclass(double g1, double g2, const std::vector<GpsSubclass>& table);

struct SubclassStat {
  int subclass = 0;          // 1-based table index
  std::size_t count = 0;
  bool present = false;
  double mean_est = 0.0;
  double mean_truth = 0.0;
  double bias = 0.0;         // relative when |mean_truth| >= 1e-8
  bool absolute_bias = false;
  double squared_error = 0.0;  // of the subgroup-averaged effect
};

std::vector<SubclassStat> metric_bias_rmse_by_gps(const std::vector<double>& est, const std::vector<double>& truth,
                                                  const std::vector<std::array<double, 3>>& gps,
                                                  const std::vector<GpsSubclass>& table = default_gps_subclasses());

struct SelectionMetrics {
  double precision = 0.0;
  bool precision_defined = false;  // false when nothing was selected
  double recall = 0.0;
  double f1 = 0.0;
  double type1 = 0.0;
};

// `selected`, `useful`, `noise` are covariate index sets; useful and noise
// partition the candidates.
SelectionMetrics metric_selection(const std::vector<int>& selected, const std::vector<int>& useful,
                                  const std::vector<int>& noise);

// Concordance of predicted survival probabilities at a fixed time against
// right-censored outcomes: over pairs whose smaller time is an event, counts
// agreement of prediction order with survival order; prediction ties score
// one half. Throws when no comparable pair exists.
double metric_concordance(const std::vector<double>& pred_survival, const std::vector<double>& y,
                          const std::vector<int>& delta);

}  // namespace riaft
