#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riaft/dataset.hpp"
#include "riaft/impute.hpp"
#include "riaft/sampler.hpp"

namespace riaft {

// Mean variable inclusion proportions over the kept draws.
std::vector<double> average_vip(const PosteriorDraws& draws);

// Jointly permutes the (time, event) pairs, leaving covariates, clusters and
// treatment untouched.
SurvivalDataset permute_outcomes(const SurvivalDataset& ds, std::uint64_t seed);

// P x L matrix of mean VIPs from fits on permuted outcomes.
struct PermutationNull {
  std::vector<std::vector<double>> rows;
  std::size_t permutations() const { return rows.size(); }
};

struct NullConfig {
  int permutations = 100;
  ChainConfig chain;  // null fits default to a reduced budget
  int jobs = 1;
  int max_retries = 2;

  NullConfig() {
    chain.draws = 1500;
    chain.burn_in = 500;
    chain.keep_f = false;
  }
};

PermutationNull build_null(const SurvivalDataset& ds, const NullConfig& cfg, std::uint64_t seed);

// Empirical quantile with the ceiling-index ("higher") convention:
// the smallest order statistic whose index is >= q*(n-1).
double empirical_quantile_higher(std::vector<double> values, double q);

struct SelectionResult {
  std::vector<std::string> names;
  std::vector<double> vip;
  std::vector<double> threshold;
  std::vector<bool> selected;        // strict inequality vip > threshold
  std::vector<int> boot_count;       // bootstrap mode only
  int boot_total = 0;
  double pi = 0.0;

  std::vector<int> selected_indices() const;
};

// Selects predictor l when its observed VIP strictly exceeds the (1-alpha)
// quantile of its own permutation-null column.
SelectionResult local_threshold_select(const std::vector<double>& vip, const PermutationNull& null_dist,
                                       double alpha, const std::vector<std::string>& names);

// The bootstrap-aggregation rule: kept when chosen in at least pi*B replicates.
inline bool count_selected(int count, int total, double pi) {
  return static_cast<double>(count) >= pi * static_cast<double>(total) - 1e-9;
}

struct BootstrapSelectConfig {
  int B = 100;
  double pi = 0.5;
  double alpha = 0.05;
  NullConfig null_cfg;
  ImputeConfig impute;
  int jobs = 1;
  int max_retries = 3;
};

// For each bootstrap replicate of the incomplete data: impute once, run the
// full permutation selection; keep predictors chosen in at least pi*B
// replicates.
SelectionResult aggregate_bootstrap_select(const SurvivalDataset& ds_with_missing, const BootstrapSelectConfig& cfg,
                                           std::uint64_t seed);

// One full permutation selection on complete data: observed fit, null, local
// thresholds.
SelectionResult permutation_select(const SurvivalDataset& ds, const NullConfig& cfg, double alpha,
                                   std::uint64_t seed);

}  // namespace riaft
