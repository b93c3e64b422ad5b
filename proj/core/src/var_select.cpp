#include "riaft/var_select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "riaft/parallel.hpp"

namespace riaft {

std::vector<double> average_vip(const PosteriorDraws& draws) {
  if (draws.vip.empty()) throw std::runtime_error("average_vip: no kept draws");
  std::vector<double> out(draws.vip.front().size(), 0.0);
  for (const auto& v : draws.vip)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[j];
  for (double& v : out) v /= static_cast<double>(draws.vip.size());
  return out;
}

SurvivalDataset permute_outcomes(const SurvivalDataset& ds, std::uint64_t seed) {
  SurvivalDataset out = ds;
  Rng rng(seed);
  std::vector<int> perm = rng.permutation(static_cast<int>(ds.n()));
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out.y[i] = ds.y[static_cast<std::size_t>(perm[i])];
    out.delta[i] = ds.delta[static_cast<std::size_t>(perm[i])];
  }
  return out;
}

PermutationNull build_null(const SurvivalDataset& ds, const NullConfig& cfg, std::uint64_t seed) {
  if (cfg.permutations < 1) throw std::invalid_argument("build_null: need at least one permutation");
  PermutationNull null_dist;
  null_dist.rows.assign(static_cast<std::size_t>(cfg.permutations), {});
  parallel_for(static_cast<std::size_t>(cfg.permutations), cfg.jobs, [&](std::size_t p) {
    for (int attempt = 0;; ++attempt) {
      try {
        const std::uint64_t stream = p + static_cast<std::size_t>(attempt) * static_cast<std::size_t>(cfg.permutations);
        SurvivalDataset permuted = permute_outcomes(ds, Rng::derive(seed, 2 * stream).next_u64());
        ChainConfig chain = cfg.chain;
        chain.seed = Rng::derive(seed, 2 * stream + 1).next_u64();
        chain.keep_f = false;
        chain.keep_forests = false;
        null_dist.rows[p] = average_vip(run_chain(permuted, chain));
        return;
      } catch (const std::exception& e) {
        if (attempt >= cfg.max_retries) throw;
        std::fprintf(stderr, "build_null: permutation %zu failed (%s); retrying\n", p, e.what());
      }
    }
  });
  return null_dist;
}

double empirical_quantile_higher(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile_higher: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * (static_cast<double>(values.size()) - 1.0);
  const std::size_t idx = static_cast<std::size_t>(std::ceil(pos));
  return values[std::min(idx, values.size() - 1)];
}

std::vector<int> SelectionResult::selected_indices() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < selected.size(); ++j)
    if (selected[j]) out.push_back(static_cast<int>(j));
  return out;
}

SelectionResult local_threshold_select(const std::vector<double>& vip, const PermutationNull& null_dist,
                                       double alpha, const std::vector<std::string>& names) {
  if (null_dist.rows.empty()) throw std::invalid_argument("local_threshold_select: empty null");
  const std::size_t L = vip.size();
  for (const auto& row : null_dist.rows)
    if (row.size() != L) throw std::invalid_argument("local_threshold_select: null width mismatch");
  SelectionResult out;
  out.names = names;
  out.vip = vip;
  out.threshold.resize(L);
  out.selected.resize(L);
  std::vector<double> column(null_dist.rows.size());
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t p = 0; p < null_dist.rows.size(); ++p) column[p] = null_dist.rows[p][j];
    out.threshold[j] = empirical_quantile_higher(column, 1.0 - alpha);
    out.selected[j] = vip[j] > out.threshold[j];
  }
  return out;
}

SelectionResult permutation_select(const SurvivalDataset& ds, const NullConfig& cfg, double alpha,
                                   std::uint64_t seed) {
  ChainConfig chain = cfg.chain;
  chain.seed = Rng::derive(seed, 0x0b5e7fed).next_u64();
  chain.keep_f = false;
  chain.keep_forests = false;
  const PosteriorDraws draws = run_chain(ds, chain);
  const auto vip = average_vip(draws);
  const auto null_dist = build_null(ds, cfg, Rng::derive(seed, 0x9e27).next_u64());
  return local_threshold_select(vip, null_dist, alpha, draws.predictor_names);
}

SelectionResult aggregate_bootstrap_select(const SurvivalDataset& ds_with_missing, const BootstrapSelectConfig& cfg,
                                           std::uint64_t seed) {
  if (cfg.B < 1) throw std::invalid_argument("aggregate_bootstrap_select: B must be >= 1");
  if (!(cfg.pi > 0.0 && cfg.pi < 1.0)) throw std::invalid_argument("aggregate_bootstrap_select: pi outside (0,1)");

  std::vector<SelectionResult> per_replicate(static_cast<std::size_t>(cfg.B));
  parallel_for(static_cast<std::size_t>(cfg.B), cfg.jobs, [&](std::size_t b) {
    for (int attempt = 0;; ++attempt) {
      try {
        const std::uint64_t stream = b + static_cast<std::size_t>(attempt) * static_cast<std::size_t>(cfg.B);
        const SurvivalDataset boot =
            bootstrap_resample(ds_with_missing, Rng::derive(seed, 3 * stream).next_u64());
        ImputeConfig imp = cfg.impute;
        imp.seed = Rng::derive(seed, 3 * stream + 1).next_u64();
        const SurvivalDataset completed = chained_impute(boot, imp);
        NullConfig null_cfg = cfg.null_cfg;
        null_cfg.jobs = 1;  // replicates own the parallelism
        per_replicate[b] =
            permutation_select(completed, null_cfg, cfg.alpha, Rng::derive(seed, 3 * stream + 2).next_u64());
        return;
      } catch (const std::exception& e) {
        if (attempt >= cfg.max_retries) throw;
        std::fprintf(stderr, "aggregate_bootstrap_select: replicate %zu failed (%s); redrawing\n", b, e.what());
      }
    }
  });

  SelectionResult out;
  out.names = per_replicate.front().names;
  const std::size_t L = out.names.size();
  out.boot_count.assign(L, 0);
  out.boot_total = cfg.B;
  out.pi = cfg.pi;
  out.vip.assign(L, 0.0);
  out.threshold.assign(L, 0.0);
  out.selected.assign(L, false);
  for (const auto& rep : per_replicate)
    for (std::size_t j = 0; j < L; ++j) {
      out.boot_count[j] += rep.selected[j] ? 1 : 0;
      out.vip[j] += rep.vip[j] / static_cast<double>(cfg.B);
      out.threshold[j] += rep.threshold[j] / static_cast<double>(cfg.B);
    }
  for (std::size_t j = 0; j < L; ++j) out.selected[j] = count_selected(out.boot_count[j], cfg.B, cfg.pi);
  return out;
}

}  // namespace riaft
