#include "riaft/impute.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>

#include "riaft/rng.hpp"

namespace riaft {

namespace {

// Design matrix over all covariates except `target`, with categorical columns
// dummy-expanded, plus log y, delta and (when present) the treatment code.
Eigen::MatrixXd build_design(const SurvivalDataset& ds, std::size_t target) {
  const std::size_t n = ds.n();
  std::size_t p = 1;  // intercept
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
    if (j == target) continue;
    p += ds.column_types[j] == ColumnType::Categorical ? std::max<std::size_t>(ds.levels[j].size(), 1) - 1 : 1;
  }
  p += 2 + (ds.has_treatment() ? 1 : 0);
  Eigen::MatrixXd D(n, p);
  std::size_t c = 0;
  D.col(c++).setOnes();
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
    if (j == target) continue;
    if (ds.column_types[j] == ColumnType::Categorical) {
      const std::size_t levels = ds.levels[j].size();
      for (std::size_t l = 1; l < levels; ++l) {
        for (std::size_t i = 0; i < n; ++i)
          D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
              ds.X[j][i] == static_cast<double>(l) ? 1.0 : 0.0;
        ++c;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = ds.X[j][i];
      ++c;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::log(ds.y[i]);
    D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1)) = static_cast<double>(ds.delta[i]);
    if (ds.has_treatment())
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 2)) = static_cast<double>(ds.treatment[i]);
  }
  return D;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  Eigen::MatrixXd AtA = A.transpose() * A;
  const double ridge = 1e-8 * (AtA.trace() / static_cast<double>(AtA.rows()) + 1.0);
  AtA.diagonal().array() += ridge;
  return AtA.ldlt().solve(A.transpose() * y);
}

// IRLS logistic regression of a 0/1 target; returns false on failure.
bool logistic_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, Eigen::VectorXd& beta) {
  beta = Eigen::VectorXd::Zero(A.cols());
  for (int it = 0; it < 25; ++it) {
    Eigen::VectorXd eta = (A * beta).cwiseMax(-30.0).cwiseMin(30.0);
    Eigen::VectorXd p = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    Eigen::VectorXd w = p.array() * (1.0 - p.array()) + 1e-6;
    Eigen::MatrixXd AtWA = A.transpose() * w.asDiagonal() * A;
    AtWA.diagonal().array() += 1e-8;
    Eigen::VectorXd step = AtWA.ldlt().solve(A.transpose() * (y - p));
    beta += step;
    if (!beta.allFinite()) return false;
    if (step.lpNorm<Eigen::Infinity>() < 1e-8) break;
  }
  return beta.allFinite();
}

}  // namespace

SurvivalDataset chained_impute(const SurvivalDataset& ds, const ImputeConfig& cfg) {
  SurvivalDataset out = ds;
  if (!ds.mask.any()) return out;

  Rng rng(cfg.seed);
  const std::size_t n = ds.n();

  std::vector<std::size_t> incomplete_cols;
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
    std::vector<std::size_t> obs;
    for (std::size_t i = 0; i < n; ++i)
      if (!ds.mask.at(i, j)) obs.push_back(i);
    if (obs.size() == n) continue;
    if (obs.empty()) throw DataError("chained_impute: column fully missing: " + ds.column_names[j], -1,
                                     ds.column_names[j]);
    incomplete_cols.push_back(j);
    // start from observed-value draws
    for (std::size_t i = 0; i < n; ++i)
      if (ds.mask.at(i, j)) out.X[j][i] = ds.X[j][obs[rng.uniform_below(obs.size())]];
  }

  for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
    for (std::size_t j : incomplete_cols) {
      std::vector<std::size_t> obs, mis;
      for (std::size_t i = 0; i < n; ++i) (ds.mask.at(i, j) ? mis : obs).push_back(i);

      const Eigen::MatrixXd D = build_design(out, j);
      Eigen::MatrixXd A(obs.size(), D.cols());
      for (std::size_t r = 0; r < obs.size(); ++r) A.row(static_cast<Eigen::Index>(r)) = D.row(static_cast<Eigen::Index>(obs[r]));

      if (ds.column_types[j] == ColumnType::Continuous) {
        Eigen::VectorXd yv(obs.size());
        for (std::size_t r = 0; r < obs.size(); ++r) yv(static_cast<Eigen::Index>(r)) = out.X[j][obs[r]];
        const Eigen::VectorXd beta = ridge_solve(A, yv);
        if (!beta.allFinite()) {
          std::fprintf(stderr, "chained_impute: degenerate linear fit for %s; marginal draw\n",
                       ds.column_names[j].c_str());
          for (std::size_t i : mis) out.X[j][i] = out.X[j][obs[rng.uniform_below(obs.size())]];
          continue;
        }
        // predictive mean matching against the observed fitted values
        std::vector<std::pair<double, std::size_t>> fitted(obs.size());
        for (std::size_t r = 0; r < obs.size(); ++r)
          fitted[r] = {D.row(static_cast<Eigen::Index>(obs[r])) * beta, obs[r]};
        std::sort(fitted.begin(), fitted.end());
        const int k = std::min<int>(cfg.pmm_donors, static_cast<int>(fitted.size()));
        for (std::size_t i : mis) {
          const double pred = D.row(static_cast<Eigen::Index>(i)) * beta;
          auto it = std::lower_bound(fitted.begin(), fitted.end(), std::make_pair(pred, std::size_t{0}));
          long pos = it - fitted.begin();
          // window of the k nearest fitted values around pos
          long lo = std::max<long>(0, pos - k);
          long hi = std::min<long>(static_cast<long>(fitted.size()) - 1, pos + k - 1);
          std::vector<std::pair<double, std::size_t>> cand;
          for (long t = lo; t <= hi; ++t) cand.push_back({std::fabs(fitted[static_cast<std::size_t>(t)].first - pred),
                                                          fitted[static_cast<std::size_t>(t)].second});
          std::sort(cand.begin(), cand.end());
          cand.resize(static_cast<std::size_t>(k));
          const std::size_t donor = cand[rng.uniform_below(static_cast<std::uint64_t>(k))].second;
          out.X[j][i] = out.X[j][donor];
        }
      } else {
        const std::size_t n_levels = std::max<std::size_t>(ds.levels[j].size(), 2);
        // one-vs-rest logistic probabilities, normalized
        Eigen::MatrixXd probs(mis.size(), n_levels);
        bool ok = true;
        for (std::size_t l = 0; l < n_levels && ok; ++l) {
          Eigen::VectorXd yv(obs.size());
          for (std::size_t r = 0; r < obs.size(); ++r)
            yv(static_cast<Eigen::Index>(r)) = out.X[j][obs[r]] == static_cast<double>(l) ? 1.0 : 0.0;
          Eigen::VectorXd beta;
          if (!logistic_fit(A, yv, beta)) {
            ok = false;
            break;
          }
          for (std::size_t r = 0; r < mis.size(); ++r) {
            const double eta = std::clamp<double>(D.row(static_cast<Eigen::Index>(mis[r])) * beta, -30.0, 30.0);
            probs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = 1.0 / (1.0 + std::exp(-eta));
          }
        }
        if (!ok) {
          std::fprintf(stderr, "chained_impute: degenerate logistic fit for %s; marginal draw\n",
                       ds.column_names[j].c_str());
          for (std::size_t i : mis) out.X[j][i] = out.X[j][obs[rng.uniform_below(obs.size())]];
          continue;
        }
        for (std::size_t r = 0; r < mis.size(); ++r) {
          double total = probs.row(static_cast<Eigen::Index>(r)).sum();
          if (!(total > 0.0)) total = 1.0;
          double u = rng.uniform() * total;
          std::size_t pick = n_levels - 1;
          for (std::size_t l = 0; l < n_levels; ++l) {
            u -= probs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l));
            if (u <= 0.0) {
              pick = l;
              break;
            }
          }
          out.X[j][mis[r]] = static_cast<double>(pick);
        }
      }
    }
  }

  // the completed dataset carries no missing cells
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) std::fill(out.mask.cols[j].begin(), out.mask.cols[j].end(), 0);
  return out;
}

}  // namespace riaft
