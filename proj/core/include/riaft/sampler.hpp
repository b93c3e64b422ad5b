#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riaft/dataset.hpp"
#include "riaft/forest.hpp"
#include "riaft/rng.hpp"

namespace riaft {

// Intercept and residual scale of the intercept-only log-normal AFT model,
// fit to the right-censored times by maximum likelihood. Responses enter the
// chain as log y - mu_aft; mu_aft is added back on output.
struct CenteringConstants {
  double mu_aft = 0.0;
  double sigma_aft = 1.0;
  bool degenerate_scale = false;  // scale pinned at the numerical floor
  bool newton_fallback = false;   // Newton failed; profile search used
};

CenteringConstants center_responses(const SurvivalDataset& ds);

struct ChainConfig {
  int draws = 4500;    // total iterations including burn-in
  int burn_in = 1000;
  int m = 200;
  BartHyper hyper;     // sigma_mu / lambda derived from the data unless set
  std::uint64_t seed = 0;
  bool keep_f = true;        // persist in-sample f draws (+ mu_aft)
  bool keep_forests = false; // persist per-draw forests (needed off-sample)
  int heartbeat_every = 0;   // stderr progress interval in iterations; 0 = off
};

// Gibbs chain state for one iteration.
struct RiaftState {
  std::vector<double> b;   // one random intercept per cluster
  double tau2 = 1.0;
  double alpha = 1.0;      // parameter-expansion scalar
  Forest forest;           // houses f and sigma^2
  std::vector<double> z;   // augmented complete log responses, centered scale
  CenteringConstants centering;
};

struct PosteriorDraws {
  std::uint64_t seed = 0;
  int total_draws = 0;
  int burn_in = 0;
  CenteringConstants centering;
  std::vector<std::string> predictor_names;
  std::size_t n_rows = 0;
  int n_clusters = 0;

  // one entry per kept draw
  std::vector<int> iteration;
  std::vector<std::vector<double>> f;   // empty when keep_f is off
  std::vector<std::vector<double>> b;
  std::vector<double> tau2;
  std::vector<double> sigma2;
  std::vector<double> alpha;
  std::vector<std::vector<double>> vip;
  std::vector<Forest> forests;          // empty unless keep_forests
  // per-draw centering offset; empty means centering.mu_aft applies to all
  // draws (populated when pooling runs whose centering differs)
  std::vector<double> mu_offset;

  std::size_t n_kept() const { return iteration.size(); }
  bool has_forests() const { return !forests.empty(); }
  double mu_for_draw(std::size_t d) const { return mu_offset.empty() ? centering.mu_aft : mu_offset[d]; }
};

// b_k | rest ~ N( tau2*alpha*S / (n_k*tau2*alpha + sigma2),
//                 sigma2*tau2*alpha / (n_k*tau2*alpha + sigma2) )
// with S the sum over the cluster of z - f residuals. n_k = 0 degrades to
// the N(0, tau2*alpha) prior.
double gibbs_update_b(double tau2, double alpha, double sigma2, double resid_sum, std::size_t n_k, Rng& rng);

// alpha | rest ~ IG(1, 1 + sum b^2 / (2 tau2))
double gibbs_update_alpha(const std::vector<double>& b, double tau2, Rng& rng);

// tau2 | rest ~ IG(K/2 + 1, (sum b^2 + 2 alpha) / (2 alpha))
double gibbs_update_tau2(const std::vector<double>& b, double alpha, Rng& rng);

// Redraws z for every censored row from the lower-truncated normal at
// log y_cent; uncensored rows keep z = log y_cent.
void augment_censored(RiaftState& state, const SurvivalDataset& ds, const std::vector<double>& log_y_cent, Rng& rng);

PosteriorDraws run_chain(const SurvivalDataset& ds, const ChainConfig& config);

// Kept-draw by row matrix of f(a, x) + mu_aft for new rows; requires
// persisted forests.
std::vector<std::vector<double>> predict_posterior(const PosteriorDraws& draws, const PredictorMatrix& rows);

// Line-delimited draw file: header record, then one record per kept draw.
void save_draws(const PosteriorDraws& draws, const std::string& path);
PosteriorDraws load_draws(const std::string& path);

}  // namespace riaft
