#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "riaft/dataset.hpp"
#include "riaft/rng.hpp"

namespace riaft {

enum class DgpMode { Heterogeneity, VarSelect };
enum class HeterogeneitySetting { A, B, C };
enum class HazardType { PH, NPH };

// Clustered Weibull survival generator: three-arm confounded assignment with
// per-arm hazard scales, or the single-arm predictor-selection design with
// 8 informative and 20 noise covariates.
struct DgpConfig {
  DgpMode mode = DgpMode::Heterogeneity;
  HeterogeneitySetting setting = HeterogeneitySetting::A;
  HazardType hazard = HazardType::PH;
  int n_clusters = 10;
  int cluster_size = 200;
  double censoring_target = 0.5;        // in (0,1); <= 0 disables censoring
  double treatment_intercept_sd = 1.0;  // tau_k in the assignment model
  double outcome_intercept_sd = 4.0;    // b_k in the outcome model
  std::vector<double> lambda;           // empty: {5000,800,1200} or {3000}
  bool noise_only = false;              // outcome depends on b_k only
  std::uint64_t seed = 0;

  std::size_t n() const { return static_cast<std::size_t>(n_clusters) * static_cast<std::size_t>(cluster_size); }
  int n_arms() const { return mode == DgpMode::Heterogeneity ? 3 : 0; }
  std::vector<double> lambdas() const;
  void check() const;
};

struct TreatmentAssignment {
  std::vector<int> labels;                    // 1..3
  std::vector<std::array<double, 3>> gps;     // true generalized propensity scores
  std::vector<double> tau;                    // per-cluster assignment intercepts
};

struct SimTruth {
  std::vector<double> b;                              // cluster outcome intercepts
  std::vector<double> eta;                            // per-row Weibull shape
  std::vector<std::vector<double>> q;                 // per-arm q(x, b); one entry in VS mode
  std::vector<std::vector<double>> counterfactual_t;  // per-arm times (heterogeneity mode)
  TreatmentAssignment assignment;                     // heterogeneity mode only
  double censoring_rate = 0.0;                        // solved exponential rate
  std::vector<double> uncensored_t;                   // the realized event times
};

struct SimResult {
  SurvivalDataset data;
  SimTruth truth;
};

// Covariate matrix, column-major. Heterogeneity: x1..x5 standard normal,
// x6, x7 three-level categorical with probabilities (.3,.3,.4) coded 0/1/2.
// VarSelect: x1,x2 Bernoulli(.5); x3,x4 N(0,1); x5..x8 from their stated
// conditional models; x9..x18 N(0,1); x19..x28 Bernoulli(.5).
std::vector<std::vector<double>> gen_covariates(const DgpConfig& cfg, Rng& rng);

TreatmentAssignment assign_treatment(const std::vector<std::vector<double>>& X, const std::vector<int>& cluster,
                                     const DgpConfig& cfg, Rng& rng);

// Arm-specific regression function of the survival model (heterogeneity
// settings a/b/c take arm 1..3; VarSelect ignores the arm).
double q_function(const DgpConfig& cfg, const std::vector<std::vector<double>>& X, std::size_t row, int arm,
                  double b_k);

double weibull_shape(const DgpConfig& cfg, double x1);

// Inverse-transform survival times. One shared uniform per row drives every
// arm, so the observed time equals the counterfactual of the assigned arm.
std::vector<std::vector<double>> gen_survival_times(const DgpConfig& cfg, const std::vector<std::vector<double>>& X,
                                                    const std::vector<double>& b, const std::vector<int>& cluster,
                                                    Rng& rng);

// Exponential censoring rate such that the expected censored fraction of
// `times`, mean_i(1 - exp(-rate * t_i)), hits `target` (bisection).
double solve_censoring_rate(const std::vector<double>& times, double target);

// E[log T(a)] - E[log T(a')] = (1/eta) * [(log l_a' + q_a') - (log l_a + q_a)]
std::vector<double> true_iste_oracle(const DgpConfig& cfg, const std::vector<std::vector<double>>& X,
                                     const std::vector<double>& b, const std::vector<int>& cluster, int arm_a,
                                     int arm_b);

// Weibull survival functionals implied by the generator.
double true_survival_prob(double lambda, double q, double eta, double t);
double true_rmst(double lambda, double q, double eta, double t_star);

// Full pipeline: covariates, assignment (heterogeneity), times, censoring.
SimResult simulate_dataset(const DgpConfig& cfg);

}  // namespace riaft
