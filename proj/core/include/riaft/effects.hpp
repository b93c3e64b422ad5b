#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riaft/sampler.hpp"
#include "riaft/tree.hpp"

namespace riaft {

struct PosteriorSummary {
  double mean = 0.0;
  double lower = 0.0;   // 2.5% quantile over draws
  double upper = 0.0;   // 97.5% quantile
};

PosteriorSummary summarize_draws(const std::vector<double>& draws);

// Individual survival treatment effects for one arm pair: per-draw, per-row
// differences in expected log survival time, with per-row summaries.
struct IsteEstimate {
  int arm_a = 1, arm_b = 2;
  std::vector<std::vector<double>> draws;  // kept-draw x n
  std::vector<double> mean, lower, upper;  // per row

  std::size_t n_rows() const { return mean.size(); }
  std::size_t n_draws() const { return draws.size(); }
  void refresh_summaries();
};

// f^d(a_j, x_i) - f^d(a_j', x_i) from persisted forests; the centering
// intercept cancels in the difference.
IsteEstimate estimate_iste(const PosteriorDraws& draws, const SurvivalDataset& ds, int arm_a, int arm_b);

struct AteEstimate {
  PosteriorSummary summary;
  std::vector<double> per_draw;  // sample averages of the per-draw effects
};

// Population effect: per-draw average over individuals; the posterior mean
// equals the average of the ISTE posterior means exactly.
AteEstimate estimate_ate(const IsteEstimate& iste);
AteEstimate estimate_ate(const PosteriorDraws& draws, const SurvivalDataset& ds, int arm_a, int arm_b);

// Per-draw survival probability at time t for one row given its per-draw f
// values. cluster >= 1 uses that cluster's sampled intercept; cluster == 0
// integrates a fresh intercept b ~ N(0, tau2*alpha) per draw.
std::vector<double> survival_prob_draws(const PosteriorDraws& draws, const std::vector<double>& f_row, int cluster,
                                        double t, std::uint64_t seed = 0);

// Per-draw restricted mean survival time on [0, t_star] by adaptive
// quadrature (absolute tolerance 1e-6).
std::vector<double> rmst_draws(const PosteriorDraws& draws, const std::vector<double>& f_row, int cluster,
                               double t_star, std::uint64_t seed = 0);

// Concatenates kept draws across fits on multiply imputed datasets. Requires
// identical row counts and predictor sets; forests are carried over with
// per-run centering offsets preserved.
PosteriorDraws pool_imputations(const std::vector<PosteriorDraws>& runs);
IsteEstimate pool_iste(const std::vector<IsteEstimate>& runs);

// Bagged depth-limited regression trees (greedy variance-reduction splits).
class RandomForestModel {
 public:
  struct Config {
    int n_trees = 200;
    int max_depth = 6;
    int min_leaf = 5;
    int mtry = 0;  // 0: ceil(p/3)
  };

  static RandomForestModel fit(const PredictorMatrix& X, const std::vector<double>& y,
                               const std::vector<int>& features, Config cfg, Rng& rng);

  std::vector<double> predict(const PredictorMatrix& X) const;
  double r2() const { return r2_; }
  const std::vector<int>& features() const { return features_; }

  struct Node {
    int var = -1;  // -1 leaf
    double threshold = 0.0;
    std::uint64_t cats_left = 0;
    int left = -1, right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;
  const std::vector<Tree>& trees() const { return trees_; }

  static double predict_tree(const Tree& tree, const PredictorMatrix& X, std::size_t row);

 private:
  std::vector<Tree> trees_;
  std::vector<int> features_;
  double r2_ = 0.0;
};

struct FitTheFitConfig {
  RandomForestModel::Config rf;
  double improvement_threshold = 0.01;  // relative R^2 gain to continue
  std::uint64_t seed = 0;
};

struct FitTheFitResult {
  std::vector<int> selected;   // covariate indices in selection order
  std::vector<double> r2_path;
  RandomForestModel model;     // fit on the selected covariates
};

// Forward selection of effect modifiers: regress the posterior-mean effects
// on covariates with a random forest, adding the covariate with the largest
// R^2 gain until the relative improvement drops below the threshold.
FitTheFitResult fit_the_fit(const std::vector<double>& iste_mean, const PredictorMatrix& X,
                            const FitTheFitConfig& cfg);

struct SubgroupCondition {
  int var = -1;
  enum class Op { LessEq, Greater, In } op = Op::LessEq;
  double threshold = 0.0;
  std::vector<int> categories;

  std::string describe(const std::vector<PredictorColumn>& schema) const;
};

struct SubgroupRule {
  std::vector<SubgroupCondition> conditions;
  std::vector<std::int32_t> members;
  double effect = 0.0;   // mean posterior-mean effect over members
  double lower = 0.0, upper = 0.0;  // from pooled member-average draws
};

struct ExtractRulesConfig {
  int max_depth = 3;
  int min_leaf = 20;
};

// Summarizes the forest with one depth-limited tree fit to its predictions;
// each leaf becomes a rule whose subgroup effect is the member average of
// the effects, with an interval from the per-draw member averages. Rules
// partition the sample.
std::vector<SubgroupRule> extract_rules(const RandomForestModel& rf, const PredictorMatrix& X,
                                        const IsteEstimate& iste, const ExtractRulesConfig& cfg = {});

}  // namespace riaft
