#pragma once

#include <cstdint>

#include "riaft/dataset.hpp"

namespace riaft {

struct ImputeConfig {
  int cycles = 10;
  int pmm_donors = 5;
  std::uint64_t seed = 0;
};

// Chained-equations single imputation. Continuous targets use predictive mean
// matching (closest `pmm_donors` fitted values, one donor drawn) on linear
// fits over the other covariates plus log y and the event indicator;
// categorical targets use logistic / one-vs-rest multinomial fits. Missing
// cells start from observed-value draws. Degenerate fits fall back to
// marginal draws. Complete data passes through unchanged.
SurvivalDataset chained_impute(const SurvivalDataset& ds, const ImputeConfig& cfg);

}  // namespace riaft
