#include "riaft/effects.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "riaft/quadrature.hpp"
#include "riaft/special.hpp"

namespace riaft {

namespace {

double quantile_linear(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

PosteriorSummary summarize_draws(const std::vector<double>& draws) {
  PosteriorSummary s;
  double sum = 0.0;
  for (double v : draws) sum += v;
  s.mean = sum / static_cast<double>(draws.size());
  s.lower = quantile_linear(draws, 0.025);
  s.upper = quantile_linear(draws, 0.975);
  return s;
}

void IsteEstimate::refresh_summaries() {
  const std::size_t n = draws.empty() ? 0 : draws[0].size();
  mean.assign(n, 0.0);
  lower.assign(n, 0.0);
  upper.assign(n, 0.0);
  std::vector<double> col(draws.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < draws.size(); ++d) col[d] = draws[d][i];
    const auto s = summarize_draws(col);
    mean[i] = s.mean;
    lower[i] = s.lower;
    upper[i] = s.upper;
  }
}

IsteEstimate estimate_iste(const PosteriorDraws& draws, const SurvivalDataset& ds, int arm_a, int arm_b) {
  if (!draws.has_forests())
    throw std::runtime_error("estimate_iste: draws carry no forests (rerun fit with keep_forests)");
  if (!ds.has_treatment()) throw std::invalid_argument("estimate_iste: dataset has no treatment column");
  if (arm_a < 1 || arm_a > ds.n_arms || arm_b < 1 || arm_b > ds.n_arms)
    throw std::invalid_argument("estimate_iste: arm out of range");

  PredictorMatrix Xa = PredictorMatrix::from_dataset(ds, /*include_treatment=*/true);
  PredictorMatrix Xb = Xa;
  Xa.fill_column(0, static_cast<double>(arm_a - 1));
  Xb.fill_column(0, static_cast<double>(arm_b - 1));

  IsteEstimate out;
  out.arm_a = arm_a;
  out.arm_b = arm_b;
  out.draws.reserve(draws.forests.size());
  for (const auto& forest : draws.forests) {
    auto fa = forest.predict(Xa);
    const auto fb = forest.predict(Xb);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] -= fb[i];  // centering cancels
    out.draws.push_back(std::move(fa));
  }
  out.refresh_summaries();
  return out;
}

AteEstimate estimate_ate(const IsteEstimate& iste) {
  AteEstimate out;
  const std::size_t n = iste.n_rows();
  out.per_draw.reserve(iste.draws.size());
  for (const auto& d : iste.draws) {
    double s = 0.0;
    for (double v : d) s += v;
    out.per_draw.push_back(s / static_cast<double>(n));
  }
  out.summary = summarize_draws(out.per_draw);
  // exact consistency with the per-row means
  double m = 0.0;
  for (double v : iste.mean) m += v;
  out.summary.mean = m / static_cast<double>(n);
  return out;
}

AteEstimate estimate_ate(const PosteriorDraws& draws, const SurvivalDataset& ds, int arm_a, int arm_b) {
  return estimate_ate(estimate_iste(draws, ds, arm_a, arm_b));
}

namespace {

std::vector<double> intercept_per_draw(const PosteriorDraws& draws, int cluster, std::uint64_t seed) {
  std::vector<double> b(draws.n_kept());
  if (cluster >= 1) {
    if (cluster > draws.n_clusters) throw std::invalid_argument("cluster index out of range");
    for (std::size_t d = 0; d < b.size(); ++d) b[d] = draws.b[d][static_cast<std::size_t>(cluster - 1)];
  } else {
    Rng rng = Rng::derive(seed, 0x6e657763);  // "newc": fresh-cluster stream
    for (std::size_t d = 0; d < b.size(); ++d)
      b[d] = rng.normal(0.0, std::sqrt(draws.tau2[d] * draws.alpha[d]));
  }
  return b;
}

}  // namespace

std::vector<double> survival_prob_draws(const PosteriorDraws& draws, const std::vector<double>& f_row, int cluster,
                                        double t, std::uint64_t seed) {
  if (!(t > 0.0)) throw std::invalid_argument("survival_prob_draws: t must be positive");
  if (f_row.size() != draws.n_kept()) throw std::invalid_argument("survival_prob_draws: draw count mismatch");
  const auto b = intercept_per_draw(draws, cluster, seed);
  std::vector<double> out(draws.n_kept());
  const double logt = std::log(t);
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] = normal_sf((logt - f_row[d] - b[d]) / std::sqrt(draws.sigma2[d]));
  return out;
}

std::vector<double> rmst_draws(const PosteriorDraws& draws, const std::vector<double>& f_row, int cluster,
                               double t_star, std::uint64_t seed) {
  if (!(t_star > 0.0)) throw std::invalid_argument("rmst_draws: t_star must be positive");
  if (f_row.size() != draws.n_kept()) throw std::invalid_argument("rmst_draws: draw count mismatch");
  const auto b = intercept_per_draw(draws, cluster, seed);
  std::vector<double> out(draws.n_kept());
  for (std::size_t d = 0; d < out.size(); ++d) {
    const double m = f_row[d] + b[d];
    const double s = std::sqrt(draws.sigma2[d]);
    auto surv = [&](double u) { return u <= 0.0 ? 1.0 : normal_sf((std::log(u) - m) / s); };
    out[d] = adaptive_simpson(surv, 0.0, t_star, 1e-6);
  }
  return out;
}

PosteriorDraws pool_imputations(const std::vector<PosteriorDraws>& runs) {
  if (runs.empty()) throw std::invalid_argument("pool_imputations: no runs");
  PosteriorDraws out = runs.front();
  out.mu_offset.assign(out.n_kept(), out.centering.mu_aft);
  const bool pool_forests = std::all_of(runs.begin(), runs.end(),
                                        [](const PosteriorDraws& r) { return r.has_forests(); });
  if (!pool_forests) out.forests.clear();
  const bool pool_f = std::all_of(runs.begin(), runs.end(), [](const PosteriorDraws& r) { return !r.f.empty(); });
  if (!pool_f) out.f.clear();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const auto& run = runs[r];
    if (run.n_rows != out.n_rows || run.predictor_names != out.predictor_names)
      throw std::invalid_argument("pool_imputations: row/predictor misalignment");
    out.iteration.insert(out.iteration.end(), run.iteration.begin(), run.iteration.end());
    out.b.insert(out.b.end(), run.b.begin(), run.b.end());
    out.tau2.insert(out.tau2.end(), run.tau2.begin(), run.tau2.end());
    out.sigma2.insert(out.sigma2.end(), run.sigma2.begin(), run.sigma2.end());
    out.alpha.insert(out.alpha.end(), run.alpha.begin(), run.alpha.end());
    out.vip.insert(out.vip.end(), run.vip.begin(), run.vip.end());
    out.mu_offset.insert(out.mu_offset.end(), run.n_kept(), run.centering.mu_aft);
    if (pool_f) out.f.insert(out.f.end(), run.f.begin(), run.f.end());
    if (pool_forests) out.forests.insert(out.forests.end(), run.forests.begin(), run.forests.end());
  }
  return out;
}

IsteEstimate pool_iste(const std::vector<IsteEstimate>& runs) {
  if (runs.empty()) throw std::invalid_argument("pool_iste: no runs");
  IsteEstimate out;
  out.arm_a = runs.front().arm_a;
  out.arm_b = runs.front().arm_b;
  const std::size_t n = runs.front().n_rows();
  for (const auto& r : runs) {
    if (r.n_rows() != n || r.arm_a != out.arm_a || r.arm_b != out.arm_b)
      throw std::invalid_argument("pool_iste: misaligned runs");
    out.draws.insert(out.draws.end(), r.draws.begin(), r.draws.end());
  }
  out.refresh_summaries();
  return out;
}

// ---------------------------------------------------------------------------
// greedy CART machinery shared by the random forest and the rule summarizer

namespace {

struct CartConfig {
  int max_depth = 6;
  int min_leaf = 5;
  int mtry = 0;  // 0 = all features
};

struct BestSplit {
  bool found = false;
  int var = -1;
  double threshold = 0.0;
  std::uint64_t cats_left = 0;
  double gain = 0.0;
};

BestSplit best_split_for_var(const PredictorMatrix& X, const std::vector<double>& y,
                             const std::vector<std::int32_t>& rows, int var, int min_leaf) {
  BestSplit best;
  const auto& sc = X.column_schema(static_cast<std::size_t>(var));
  const auto& col = X.col(static_cast<std::size_t>(var));
  const std::size_t n = rows.size();

  double total = 0.0;
  for (auto r : rows) total += y[static_cast<std::size_t>(r)];

  if (sc.type == ColumnType::Continuous) {
    std::vector<std::pair<double, double>> vy(n);  // (x, y)
    for (std::size_t i = 0; i < n; ++i)
      vy[i] = {col[static_cast<std::size_t>(rows[i])], y[static_cast<std::size_t>(rows[i])]};
    std::sort(vy.begin(), vy.end());
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += vy[i].second;
      if (vy[i].first == vy[i + 1].first) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(nr) -
                          total * total / static_cast<double>(n);
      if (!best.found || gain > best.gain) {
        best.found = true;
        best.var = var;
        best.threshold = 0.5 * (vy[i].first + vy[i + 1].first);
        best.gain = gain;
      }
    }
    return best;
  }

  // categorical: order codes by mean response, then scan ordered prefixes
  struct CodeAgg {
    int code;
    double sum = 0.0;
    double cnt = 0.0;
  };
  std::vector<CodeAgg> aggs;
  for (auto r : rows) {
    const int code = static_cast<int>(col[static_cast<std::size_t>(r)]);
    auto it = std::find_if(aggs.begin(), aggs.end(), [&](const CodeAgg& a) { return a.code == code; });
    if (it == aggs.end()) {
      aggs.push_back({code, y[static_cast<std::size_t>(r)], 1.0});
    } else {
      it->sum += y[static_cast<std::size_t>(r)];
      it->cnt += 1.0;
    }
  }
  if (aggs.size() < 2) return best;
  std::sort(aggs.begin(), aggs.end(), [](const CodeAgg& a, const CodeAgg& b) { return a.sum / a.cnt < b.sum / b.cnt; });
  double left_sum = 0.0, left_cnt = 0.0;
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k + 1 < aggs.size(); ++k) {
    left_sum += aggs[k].sum;
    left_cnt += aggs[k].cnt;
    if (aggs[k].code < 64) mask |= 1ULL << aggs[k].code;
    const double right_cnt = static_cast<double>(n) - left_cnt;
    if (left_cnt < min_leaf || right_cnt < min_leaf) continue;
    const double right_sum = total - left_sum;
    const double gain =
        left_sum * left_sum / left_cnt + right_sum * right_sum / right_cnt - total * total / static_cast<double>(n);
    if (!best.found || gain > best.gain) {
      best.found = true;
      best.var = var;
      best.cats_left = mask;
      best.gain = gain;
    }
  }
  return best;
}

int build_cart_node(RandomForestModel::Tree& tree, const PredictorMatrix& X, const std::vector<double>& y,
                    std::vector<std::int32_t> rows, const std::vector<int>& features, const CartConfig& cfg,
                    int depth, Rng* rng) {
  const int id = static_cast<int>(tree.size());
  tree.push_back({});
  double mean = 0.0;
  for (auto r : rows) mean += y[static_cast<std::size_t>(r)];
  mean /= static_cast<double>(rows.size());
  tree[static_cast<std::size_t>(id)].value = mean;

  if (depth >= cfg.max_depth || rows.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) return id;

  // feature subsample per node
  std::vector<int> tried = features;
  if (cfg.mtry > 0 && cfg.mtry < static_cast<int>(features.size()) && rng != nullptr) {
    for (int k = 0; k < cfg.mtry; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng->uniform_below(tried.size() - static_cast<std::size_t>(k)));
      std::swap(tried[static_cast<std::size_t>(k)], tried[j]);
    }
    tried.resize(static_cast<std::size_t>(cfg.mtry));
  }

  BestSplit best;
  for (int var : tried) {
    const BestSplit cand = best_split_for_var(X, y, rows, var, cfg.min_leaf);
    if (cand.found && (!best.found || cand.gain > best.gain)) best = cand;
  }
  if (!best.found || best.gain <= 1e-12) return id;

  std::vector<std::int32_t> left, right;
  const auto& sc = X.column_schema(static_cast<std::size_t>(best.var));
  const auto& col = X.col(static_cast<std::size_t>(best.var));
  for (auto r : rows) {
    bool go_left;
    if (sc.type == ColumnType::Categorical) {
      const long code = static_cast<long>(col[static_cast<std::size_t>(r)]);
      go_left = (code >= 0 && code < 64) ? ((best.cats_left >> code) & 1ULL) : true;
    } else {
      go_left = col[static_cast<std::size_t>(r)] <= best.threshold;
    }
    (go_left ? left : right).push_back(r);
  }
  if (left.size() < static_cast<std::size_t>(cfg.min_leaf) || right.size() < static_cast<std::size_t>(cfg.min_leaf))
    return id;

  rows.clear();
  rows.shrink_to_fit();
  const int l = build_cart_node(tree, X, y, std::move(left), features, cfg, depth + 1, rng);
  const int r = build_cart_node(tree, X, y, std::move(right), features, cfg, depth + 1, rng);
  auto& nd = tree[static_cast<std::size_t>(id)];
  nd.var = best.var;
  nd.threshold = best.threshold;
  nd.cats_left = best.cats_left;
  nd.left = l;
  nd.right = r;
  return id;
}

RandomForestModel::Tree build_cart(const PredictorMatrix& X, const std::vector<double>& y,
                                   std::vector<std::int32_t> rows, const std::vector<int>& features,
                                   const CartConfig& cfg, Rng* rng) {
  RandomForestModel::Tree tree;
  build_cart_node(tree, X, y, std::move(rows), features, cfg, 0, rng);
  return tree;
}

}  // namespace

double RandomForestModel::predict_tree(const Tree& tree, const PredictorMatrix& X, std::size_t row) {
  int id = 0;
  for (;;) {
    const Node& nd = tree[static_cast<std::size_t>(id)];
    if (nd.var < 0) return nd.value;
    const auto& sc = X.column_schema(static_cast<std::size_t>(nd.var));
    const double v = X.at(row, static_cast<std::size_t>(nd.var));
    bool left;
    if (sc.type == ColumnType::Categorical) {
      const long code = static_cast<long>(v);
      left = (code >= 0 && code < 64) ? ((nd.cats_left >> code) & 1ULL) : true;
    } else {
      left = v <= nd.threshold;
    }
    id = left ? nd.left : nd.right;
  }
}

RandomForestModel RandomForestModel::fit(const PredictorMatrix& X, const std::vector<double>& y,
                                         const std::vector<int>& features, Config cfg, Rng& rng) {
  if (features.empty()) throw std::invalid_argument("RandomForestModel::fit: no features");
  RandomForestModel model;
  model.features_ = features;
  CartConfig cart{cfg.max_depth, cfg.min_leaf,
                  cfg.mtry > 0 ? cfg.mtry
                               : static_cast<int>(std::ceil(static_cast<double>(features.size()) / 3.0))};
  const std::size_t n = y.size();
  model.trees_.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::vector<std::int32_t> rows(n);
    for (auto& r : rows) r = static_cast<std::int32_t>(rng.uniform_below(n));
    model.trees_.push_back(build_cart(X, y, std::move(rows), features, cart, &rng));
  }
  // in-sample fit quality
  const auto pred = model.predict(X);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sse += (y[i] - pred[i]) * (y[i] - pred[i]);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  model.r2_ = sst > 0.0 ? 1.0 - sse / sst : 0.0;
  return model;
}

std::vector<double> RandomForestModel::predict(const PredictorMatrix& X) const {
  std::vector<double> out(X.n_rows(), 0.0);
  for (const auto& tree : trees_)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += predict_tree(tree, X, i);
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (double& v : out) v *= inv;
  return out;
}

FitTheFitResult fit_the_fit(const std::vector<double>& iste_mean, const PredictorMatrix& X,
                            const FitTheFitConfig& cfg) {
  FitTheFitResult out;
  double mean = 0.0;
  for (double v : iste_mean) mean += v;
  mean /= static_cast<double>(iste_mean.size());
  double sst = 0.0;
  for (double v : iste_mean) sst += (v - mean) * (v - mean);
  if (sst <= 1e-12) return out;  // constant outcome: nothing to explain

  const int p = static_cast<int>(X.n_cols());
  std::vector<int> remaining(p);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::uint64_t stream = 0;
  double r2_prev = 0.0;

  while (!remaining.empty()) {
    int best_var = -1;
    double best_r2 = -1e300;
    for (int cand : remaining) {
      std::vector<int> trial = out.selected;
      trial.push_back(cand);
      Rng rng = Rng::derive(cfg.seed, stream++);
      const auto model = RandomForestModel::fit(X, iste_mean, trial, cfg.rf, rng);
      if (model.r2() > best_r2) {
        best_r2 = model.r2();
        best_var = cand;
      }
    }
    if (out.selected.empty()) {
      // step 1: always take the single best covariate
      out.selected.push_back(best_var);
      out.r2_path.push_back(best_r2);
      r2_prev = best_r2;
    } else {
      const double rel = (best_r2 - r2_prev) / std::max(std::fabs(r2_prev), 1e-12);
      if (rel < cfg.improvement_threshold) break;
      out.selected.push_back(best_var);
      out.r2_path.push_back(best_r2);
      r2_prev = best_r2;
    }
    remaining.erase(std::remove(remaining.begin(), remaining.end(), out.selected.back()), remaining.end());
  }

  Rng rng = Rng::derive(cfg.seed, 0xF17F17);
  out.model = RandomForestModel::fit(X, iste_mean, out.selected, cfg.rf, rng);
  return out;
}

std::string SubgroupCondition::describe(const std::vector<PredictorColumn>& schema) const {
  std::ostringstream os;
  os << schema[static_cast<std::size_t>(var)].name;
  switch (op) {
    case Op::LessEq:
      os << " <= " << threshold;
      break;
    case Op::Greater:
      os << " > " << threshold;
      break;
    case Op::In: {
      os << " in {";
      for (std::size_t i = 0; i < categories.size(); ++i) os << (i ? "," : "") << categories[i];
      os << "}";
      break;
    }
  }
  return os.str();
}

std::vector<SubgroupRule> extract_rules(const RandomForestModel& rf, const PredictorMatrix& X,
                                        const IsteEstimate& iste, const ExtractRulesConfig& cfg) {
  const std::vector<double> target = rf.predict(X);
  std::vector<std::int32_t> rows(X.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  const CartConfig cart{cfg.max_depth, cfg.min_leaf, 0};
  const auto tree = build_cart(X, target, rows, rf.features(), cart, nullptr);

  // collect leaves with their path conditions and members
  std::vector<SubgroupRule> rules;
  struct Frame {
    int id;
    std::vector<SubgroupCondition> conds;
    std::vector<std::int32_t> members;
  };
  std::vector<std::int32_t> all(X.n_rows());
  std::iota(all.begin(), all.end(), 0);
  std::vector<Frame> stack{{0, {}, std::move(all)}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const auto& nd = tree[static_cast<std::size_t>(f.id)];
    if (nd.var < 0) {
      SubgroupRule rule;
      rule.conditions = std::move(f.conds);
      rule.members = std::move(f.members);
      rules.push_back(std::move(rule));
      continue;
    }
    const auto& sc = X.column_schema(static_cast<std::size_t>(nd.var));
    Frame left{nd.left, f.conds, {}}, right{nd.right, f.conds, {}};
    if (sc.type == ColumnType::Categorical) {
      SubgroupCondition cl, cr;
      cl.var = cr.var = nd.var;
      cl.op = cr.op = SubgroupCondition::Op::In;
      for (int c = 0; c < 64; ++c) {
        if (c >= sc.n_codes) break;
        if ((nd.cats_left >> c) & 1ULL)
          cl.categories.push_back(c);
        else
          cr.categories.push_back(c);
      }
      left.conds.push_back(cl);
      right.conds.push_back(cr);
    } else {
      left.conds.push_back({nd.var, SubgroupCondition::Op::LessEq, nd.threshold, {}});
      right.conds.push_back({nd.var, SubgroupCondition::Op::Greater, nd.threshold, {}});
    }
    const auto& col = X.col(static_cast<std::size_t>(nd.var));
    for (auto r : f.members) {
      bool go_left;
      if (sc.type == ColumnType::Categorical) {
        const long code = static_cast<long>(col[static_cast<std::size_t>(r)]);
        go_left = (code >= 0 && code < 64) ? ((nd.cats_left >> code) & 1ULL) : true;
      } else {
        go_left = col[static_cast<std::size_t>(r)] <= nd.threshold;
      }
      (go_left ? left.members : right.members).push_back(r);
    }
    stack.push_back(std::move(left));
    stack.push_back(std::move(right));
  }

  // subgroup effect and interval from the member-average draws
  for (auto& rule : rules) {
    double eff = 0.0;
    for (auto r : rule.members) eff += iste.mean[static_cast<std::size_t>(r)];
    rule.effect = rule.members.empty() ? 0.0 : eff / static_cast<double>(rule.members.size());
    if (!iste.draws.empty() && !rule.members.empty()) {
      std::vector<double> per_draw(iste.draws.size());
      for (std::size_t d = 0; d < iste.draws.size(); ++d) {
        double s = 0.0;
        for (auto r : rule.members) s += iste.draws[d][static_cast<std::size_t>(r)];
        per_draw[d] = s / static_cast<double>(rule.members.size());
      }
      const auto sum = summarize_draws(per_draw);
      rule.lower = sum.lower;
      rule.upper = sum.upper;
    }
  }
  return rules;
}

}  // namespace riaft
