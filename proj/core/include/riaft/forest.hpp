#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "riaft/rng.hpp"
#include "riaft/tree.hpp"

namespace riaft {

// Sum-of-trees regression sampler: regularized shallow trees updated by
// Bayesian backfitting, conjugate normal leaf draws and an inverse-chi-square
// residual variance.
class Forest {
 public:
  Forest() = default;

  // m single-leaf trees predicting 0; sigma2 = var(response); sigma_mu from
  // the response range unless overridden; lambda calibrated so that
  // P(sigma < sd(response)) = 0.9 under the nu-scaled prior unless overridden.
  static Forest init(int m, const std::vector<double>& response, const PredictorMatrix& X, BartHyper hyper = {});

  // One sweep: for each tree, one Metropolis move against the integrated
  // leaf likelihood on partial residuals, then conjugate leaf draws; ends
  // with the sigma2 draw. X must match the schema bound at init.
  void backfit_sweep(const PredictorMatrix& X, const std::vector<double>& r, Rng& rng);

  std::vector<double> predict(const PredictorMatrix& X) const;
  // Cached sum of tree fits on the training rows (valid after a sweep).
  const std::vector<double>& training_fit() const { return total_fit_; }

  // Proportion of splitting rules using each predictor; zero vector when the
  // forest has no internal nodes.
  std::vector<double> vip() const;

  double sigma2() const { return sigma2_; }
  void set_sigma2(double v) { sigma2_ = v; }
  const BartHyper& hyper() const { return hyper_; }
  int m() const { return static_cast<int>(trees_.size()); }
  const std::vector<PredictorColumn>& schema() const { return schema_; }
  const DecisionTree& tree(int h) const { return trees_[static_cast<std::size_t>(h)]; }
  DecisionTree& mutable_tree(int h) { return trees_[static_cast<std::size_t>(h)]; }

  double mean_leaf_depth() const;
  std::size_t n_internal_nodes() const;

  // counters over the lifetime of the forest
  std::size_t proposals() const { return n_proposals_; }
  std::size_t accepts() const { return n_accepts_; }

  // Copy without training-row caches; predicts identically, cannot sweep.
  Forest compact_copy() const;

  // Line-delimited records: a header with hyperparameters and schema, then
  // one preorder tree record per line. Round-trips bit-exactly.
  std::string serialize() const;
  static Forest deserialize(const std::string& text);
  static Forest deserialize(std::istream& in);

 private:
  BartHyper hyper_;
  std::vector<DecisionTree> trees_;
  std::vector<PredictorColumn> schema_;
  double sigma2_ = 1.0;
  std::size_t n_train_ = 0;
  std::vector<double> total_fit_;
  std::size_t n_proposals_ = 0, n_accepts_ = 0;
};

}  // namespace riaft
