#include "riaft/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "riaft/quadrature.hpp"

namespace riaft {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<double> DgpConfig::lambdas() const {
  if (!lambda.empty()) return lambda;
  if (mode == DgpMode::Heterogeneity) return {5000.0, 800.0, 1200.0};
  return {3000.0};
}

void DgpConfig::check() const {
  if (n_clusters < 1 || cluster_size < 1) throw std::invalid_argument("DgpConfig: K and n_k must be >= 1");
  if (censoring_target >= 1.0) throw std::invalid_argument("DgpConfig: censoring target must be < 1");
  for (double l : lambdas())
    if (!(l > 0.0)) throw std::invalid_argument("DgpConfig: lambda must be positive");
  if (mode == DgpMode::Heterogeneity && !lambda.empty() && lambda.size() != 3)
    throw std::invalid_argument("DgpConfig: heterogeneity mode needs 3 lambdas");
}

std::vector<std::vector<double>> gen_covariates(const DgpConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.n();
  if (cfg.mode == DgpMode::Heterogeneity) {
    std::vector<std::vector<double>> X(7, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < 5; ++j) X[static_cast<std::size_t>(j)][i] = rng.normal();
      for (int j = 5; j < 7; ++j) {
        const double u = rng.uniform();
        X[static_cast<std::size_t>(j)][i] = u < 0.3 ? 0.0 : (u < 0.6 ? 1.0 : 2.0);
      }
    }
    return X;
  }
  std::vector<std::vector<double>> X(28, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    X[0][i] = static_cast<double>(rng.bernoulli(0.5));
    X[1][i] = static_cast<double>(rng.bernoulli(0.5));
    X[2][i] = rng.normal();
    X[3][i] = rng.normal();
    X[4][i] = rng.normal(0.3 * X[1][i] - 0.2 * X[2][i], 1.0);
    X[5][i] = rng.normal(-0.4 * X[2][i] + 0.4 * X[3][i] + 0.3 * X[2][i] * X[3][i], 1.0);
    X[6][i] = rng.normal(0.1 * X[3][i] * (X[4][i] - 2.0) * (X[4][i] - 2.0) - 0.1 * X[5][i] * X[5][i], 1.0);
    X[7][i] = rng.normal(-0.3 * X[4][i] * X[4][i] + 0.5 * X[5][i] + 0.3 * X[6][i] + 0.2 * X[5][i] * X[6][i], 1.0);
    for (int j = 8; j < 18; ++j) X[static_cast<std::size_t>(j)][i] = rng.normal();
    for (int j = 18; j < 28; ++j) X[static_cast<std::size_t>(j)][i] = static_cast<double>(rng.bernoulli(0.5));
  }
  return X;
}

TreatmentAssignment assign_treatment(const std::vector<std::vector<double>>& X, const std::vector<int>& cluster,
                                     const DgpConfig& cfg, Rng& rng) {
  if (cfg.mode != DgpMode::Heterogeneity)
    throw std::invalid_argument("assign_treatment: heterogeneity mode only");
  const std::size_t n = cluster.size();
  TreatmentAssignment out;
  out.tau.resize(static_cast<std::size_t>(cfg.n_clusters));
  for (auto& t : out.tau) t = rng.normal(0.0, cfg.treatment_intercept_sd);
  out.labels.resize(n);
  out.gps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = X[0][i], x2 = X[1][i], x3 = X[2][i], x4 = X[3][i], x5 = X[4][i], x6 = X[5][i], x7 = X[6][i];
    const double tk = out.tau[static_cast<std::size_t>(cluster[i] - 1)];
    const double lp1 = 1.5 + .1 * x1 + .1 * x2 + .1 * x3 + .5 * x4 + .4 * x5 + .2 * x6 + .3 * x7 + .4 * x2 * x2 +
                       .4 * x2 * x2 * x5 + tk;
    const double lp2 = .7 + .1 * x1 + .3 * x2 + .2 * x3 + .2 * x4 + .1 * x5 + .4 * x6 + .5 * x7 - .3 * x2 * x4 +
                       .7 * x2 * x2 * x4 + tk;
    const double m = std::max({lp1, lp2, 0.0});
    const double e1 = std::exp(lp1 - m), e2 = std::exp(lp2 - m), e3 = std::exp(-m);
    const double s = e1 + e2 + e3;
    out.gps[i] = {e1 / s, e2 / s, e3 / s};
    const double u = rng.uniform();
    out.labels[i] = u < out.gps[i][0] ? 1 : (u < out.gps[i][0] + out.gps[i][1] ? 2 : 3);
  }
  return out;
}

double q_function(const DgpConfig& cfg, const std::vector<std::vector<double>>& X, std::size_t i, int arm,
                  double b_k) {
  if (cfg.noise_only) return b_k;
  if (cfg.mode == DgpMode::VarSelect) {
    const double x1 = X[0][i], x2 = X[1][i], x3 = X[2][i], x4 = X[3][i], x5 = X[4][i], x6 = X[5][i], x7 = X[6][i],
                 x8 = X[7][i];
    return 1.8 * x1 + 0.5 * x2 + 1.1 * x3 - 0.4 * std::exp(x5) + 0.4 * (x6 - 1.5) * (x6 - 1.5) +
           0.1 * (x7 - 0.1) * (x7 - 0.1) * (x7 - 0.1) - 5.0 * std::sin(0.1 * kPi * x4 * x8) - 0.4 * x5 * x7 + b_k;
  }
  const double x1 = X[0][i], x2 = X[1][i], x3 = X[2][i], x4 = X[3][i], x5 = X[4][i], x6 = X[5][i], x7 = X[6][i];
  switch (cfg.setting) {
    case HeterogeneitySetting::A:
      switch (arm) {
        case 1:
          return .1 * x1 + .3 * x2 + std::sin(kPi * x3) + .6 * x4 + .5 * x5 + 1.2 * x6 + .4 * x7 + .3 * x2 * x2 +
                 .5 * x4 * x5 + b_k - 1.0;
        case 2:
          return .4 * x1 + 1.2 * std::sin(kPi * x2) + .4 * x3 + .3 * x4 + 1.0 * x5 + .8 * x6 + .2 * x7 +
                 .7 * x1 * x1 + .4 * x1 * x4 + b_k;
        case 3:
          return .4 * x1 + .9 * x2 + .4 * x3 + .9 * x4 + .4 * x5 + .4 * x6 + .3 * x7 + b_k - 2.0;
      }
      break;
    case HeterogeneitySetting::B:
      switch (arm) {
        case 1:
          return .1 * x1 + .3 * x2 + std::sin(kPi * x3) + .6 * x4 + .5 * x5 + 1.2 * x6 + .3 * x7 + .3 * x2 * x2 +
                 .5 * x4 * x5 + b_k - 1.0;
        case 2:
          return .4 * x1 + 1.2 * std::sin(kPi * x2) + .4 * x3 + .3 * x4 + 1.0 * x5 + .8 * x6 + .1 * x7 +
                 .7 * x1 * x1 + .4 * x1 * x4 + b_k;
        case 3:
          return .4 * std::sin(kPi * x1) + .9 * x2 + .9 * x3 + .4 * x4 + .4 * x5 + .9 * x6 + .3 * x7 + .4 * x4 * x4 -
                 .3 * x2 * x3 + b_k - 3.0;
      }
      break;
    case HeterogeneitySetting::C:
      switch (arm) {
        case 1:
          return .1 * x1 + .3 * x2 + std::sin(kPi * x3) + .6 * x4 + .5 * x5 + 1.2 * x6 + .3 * x2 * x2 +
                 .5 * x4 * x5 + b_k - 1.0;
        case 2:
          return .4 * x1 + 1.2 * std::sin(kPi * x3) + .4 * x4 + .3 * x5 + 1.0 * x6 + .8 * x7 + .7 * x1 * x1 +
                 .4 * x1 * x4 + b_k;
        case 3:
          return .4 * std::sin(kPi * x2) + .9 * x3 + .9 * x4 + .4 * x5 + .4 * x6 + .9 * x7 + .4 * x4 * x4 -
                 .3 * x2 * x3 + b_k - 3.0;
      }
      break;
  }
  throw std::invalid_argument("q_function: arm must be in 1..3");
}

double weibull_shape(const DgpConfig& cfg, double x1) {
  return cfg.hazard == HazardType::PH ? 2.0 : std::exp(0.7 + 0.5 * x1);
}

std::vector<std::vector<double>> gen_survival_times(const DgpConfig& cfg, const std::vector<std::vector<double>>& X,
                                                    const std::vector<double>& b, const std::vector<int>& cluster,
                                                    Rng& rng) {
  const std::size_t n = cluster.size();
  const auto lambdas = cfg.lambdas();
  const int arms = std::max<int>(1, cfg.n_arms());
  std::vector<std::vector<double>> t(static_cast<std::size_t>(arms), std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double eta = weibull_shape(cfg, X[0][i]);
    const double bk = b[static_cast<std::size_t>(cluster[i] - 1)];
    for (int a = 1; a <= arms; ++a) {
      const double q = q_function(cfg, X, i, a, bk);
      const double lam = lambdas[static_cast<std::size_t>(a - 1)];
      t[static_cast<std::size_t>(a - 1)][i] = std::pow(-std::log(u) / (lam * std::exp(q)), 1.0 / eta);
    }
  }
  return t;
}

double solve_censoring_rate(const std::vector<double>& times, double target) {
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("solve_censoring_rate: target outside (0,1)");
  auto censored_fraction = [&](double rate) {
    double s = 0.0;
    for (double t : times) s += 1.0 - std::exp(-rate * t);
    return s / static_cast<double>(times.size());
  };
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (censored_fraction(hi) < target) {
    hi *= 2.0;
    if (++guard > 2000) throw std::runtime_error("solve_censoring_rate: target unreachable");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (censored_fraction(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> true_iste_oracle(const DgpConfig& cfg, const std::vector<std::vector<double>>& X,
                                     const std::vector<double>& b, const std::vector<int>& cluster, int arm_a,
                                     int arm_b) {
  const auto lambdas = cfg.lambdas();
  if (arm_a < 1 || arm_b < 1 || arm_a > static_cast<int>(lambdas.size()) || arm_b > static_cast<int>(lambdas.size()))
    throw std::invalid_argument("true_iste_oracle: arm out of range");
  const std::size_t n = cluster.size();
  std::vector<double> zeta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = weibull_shape(cfg, X[0][i]);
    const double bk = b[static_cast<std::size_t>(cluster[i] - 1)];
    const double qa = q_function(cfg, X, i, arm_a, bk);
    const double qb = q_function(cfg, X, i, arm_b, bk);
    // grouped so the identical-arm case cancels exactly
    zeta[i] = ((std::log(lambdas[static_cast<std::size_t>(arm_b - 1)]) -
                std::log(lambdas[static_cast<std::size_t>(arm_a - 1)])) +
               (qb - qa)) /
              eta;
  }
  return zeta;
}

double true_survival_prob(double lambda, double q, double eta, double t) {
  // survival function implied by the inverse-transform generator:
  // -log U = lambda * exp(q) * T^eta, hence S(t) = exp(-lambda e^q t^eta)
  if (t <= 0.0) return 1.0;
  return std::exp(-lambda * std::exp(q) * std::pow(t, eta));
}

double true_rmst(double lambda, double q, double eta, double t_star) {
  auto f = [&](double u) { return true_survival_prob(lambda, q, eta, u); };
  return adaptive_simpson(f, 0.0, t_star, 1e-8);
}

SimResult simulate_dataset(const DgpConfig& cfg) {
  cfg.check();
  Rng rng(cfg.seed);
  const std::size_t n = cfg.n();

  std::vector<int> cluster(n);
  for (std::size_t i = 0; i < n; ++i) cluster[i] = static_cast<int>(i / static_cast<std::size_t>(cfg.cluster_size)) + 1;

  auto X = gen_covariates(cfg, rng);

  SimResult out;
  out.truth.b.resize(static_cast<std::size_t>(cfg.n_clusters));
  for (auto& v : out.truth.b) v = rng.normal(0.0, cfg.outcome_intercept_sd);

  if (cfg.mode == DgpMode::Heterogeneity) out.truth.assignment = assign_treatment(X, cluster, cfg, rng);

  const auto counterfactuals = gen_survival_times(cfg, X, out.truth.b, cluster, rng);
  const int arms = cfg.n_arms();

  std::vector<double> t_obs(n);
  if (arms > 0) {
    for (std::size_t i = 0; i < n; ++i)
      t_obs[i] = counterfactuals[static_cast<std::size_t>(out.truth.assignment.labels[i] - 1)][i];
  } else {
    t_obs = counterfactuals[0];
  }
  out.truth.counterfactual_t = counterfactuals;
  out.truth.uncensored_t = t_obs;
  out.truth.eta.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.truth.eta[i] = weibull_shape(cfg, X[0][i]);
  const int q_arms = arms > 0 ? arms : 1;
  out.truth.q.assign(static_cast<std::size_t>(q_arms), std::vector<double>(n));
  for (int a = 1; a <= q_arms; ++a)
    for (std::size_t i = 0; i < n; ++i)
      out.truth.q[static_cast<std::size_t>(a - 1)][i] =
          q_function(cfg, X, i, a, out.truth.b[static_cast<std::size_t>(cluster[i] - 1)]);

  SurvivalDataset& ds = out.data;
  ds.n_clusters = cfg.n_clusters;
  ds.cluster = cluster;
  ds.y.resize(n);
  ds.delta.resize(n);
  if (cfg.censoring_target > 0.0) {
    out.truth.censoring_rate = solve_censoring_rate(t_obs, cfg.censoring_target);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = rng.exponential(out.truth.censoring_rate);
      ds.y[i] = std::min(t_obs[i], c);
      ds.delta[i] = t_obs[i] < c ? 1 : 0;
    }
  } else {
    ds.y = t_obs;
    std::fill(ds.delta.begin(), ds.delta.end(), 1);
  }
  if (arms > 0) {
    ds.treatment = out.truth.assignment.labels;
    ds.n_arms = arms;
  }

  const std::size_t L = X.size();
  ds.X = std::move(X);
  ds.column_names.resize(L);
  ds.column_types.assign(L, ColumnType::Continuous);
  ds.levels.assign(L, {});
  ds.mask.cols.assign(L, std::vector<std::uint8_t>(n, 0));
  for (std::size_t j = 0; j < L; ++j) ds.column_names[j] = "x" + std::to_string(j + 1);
  if (cfg.mode == DgpMode::Heterogeneity) {
    for (std::size_t j : {std::size_t{5}, std::size_t{6}}) {
      ds.column_types[j] = ColumnType::Categorical;
      ds.levels[j] = {"0", "1", "2"};
    }
  }
  ds.check_invariants();
  return out;
}

}  // namespace riaft
