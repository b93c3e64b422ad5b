#pragma once

#include <cstdint>
#include <vector>

#include "riaft/dataset.hpp"

namespace riaft {

// One product term of a weighted sum score: coef * x[var1] * x[var2]
// (var2 < 0 for a linear term; var1 == var2 for a square).
struct WssTerm {
  double coef = 1.0;
  int var1 = -1;
  int var2 = -1;
};

struct SubsamplePlan {
  double proportion = 0.0;
  std::vector<int> targets;   // covariate indices masked in this subsample
  std::vector<WssTerm> wss;
  bool both_tailed = false;   // logistic of |standardized wss| instead of wss
};

// Multivariate MAR amputation: rows are randomly partitioned into subsamples,
// each computing a weighted sum score whose logistic (shift solved so the
// expected within-subsample missingness equals `quota`) drives the mask.
struct AmputationPlan {
  std::vector<SubsamplePlan> subsamples;
  double quota = 0.40;

  void check(const SurvivalDataset& ds) const;
};

// The 8-subsample plan over x3..x8 with proportions
// (.30,.09,.09,.08,.08,.16,.10,.10): single targets x5..x8, joint pairs
// (x5,x6), (x6,x7), (x7,x8), (x6,x8); right-tailed for the first five,
// both-tailed for the last three. Hits ~40% incomplete rows at quota 0.4.
AmputationPlan default_amputation_plan();

SurvivalDataset ampute(const SurvivalDataset& ds, const AmputationPlan& plan, std::uint64_t seed);

}  // namespace riaft
