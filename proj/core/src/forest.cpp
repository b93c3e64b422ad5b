#include "riaft/forest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "riaft/special.hpp"

namespace riaft {

namespace {

double variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

// Integrated leaf log-likelihood up to terms that cancel in move ratios.
inline double leaf_loglik(double n, double sum_r, double sigma2, double sigma_mu2) {
  const double denom = sigma2 + n * sigma_mu2;
  return 0.5 * std::log(sigma2 / denom) + sigma_mu2 * sum_r * sum_r / (2.0 * sigma2 * denom);
}

}  // namespace

Forest Forest::init(int m, const std::vector<double>& response, const PredictorMatrix& X, BartHyper hyper) {
  if (m < 1) throw std::invalid_argument("Forest::init: m must be >= 1");
  if (response.empty()) throw std::invalid_argument("Forest::init: empty response");
  if (X.n_rows() != response.size()) throw std::invalid_argument("Forest::init: X rows != response length");
  Forest f;
  const auto [lo, hi] = std::minmax_element(response.begin(), response.end());
  const double range = *hi - *lo;
  hyper.m = m;
  if (hyper.sigma_mu <= 0.0) {
    const double span = range > 0.0 ? range : 1.0;
    hyper.sigma_mu = span / (2.0 * hyper.leaf_k * std::sqrt(static_cast<double>(m)));
  }
  const double var0 = std::max(variance(response), 1e-12);
  if (hyper.lambda <= 0.0) {
    // P(sigma^2 < var0) = 0.9 for sigma^2 ~ nu*lambda / chisq(nu)
    const double q10 = chi2_quantile(0.10, hyper.nu);
    hyper.lambda = var0 * q10 / hyper.nu;
  }
  f.hyper_ = hyper;
  f.sigma2_ = var0;
  f.n_train_ = response.size();
  f.schema_ = X.schema();
  f.trees_.assign(static_cast<std::size_t>(m), DecisionTree(response.size()));
  f.total_fit_.assign(response.size(), 0.0);
  return f;
}

void Forest::backfit_sweep(const PredictorMatrix& X, const std::vector<double>& r, Rng& rng) {
  const std::size_t n = n_train_;
  if (r.size() != n || X.n_rows() != n) throw std::invalid_argument("backfit_sweep: shape mismatch");
  for (double v : r)
    if (!std::isfinite(v)) throw std::invalid_argument("backfit_sweep: non-finite residual");

  const double sigma_mu2 = hyper_.sigma_mu * hyper_.sigma_mu;
  std::vector<double> tree_fit(n);
  std::vector<double> partial(n);

  for (auto& tree : trees_) {
    std::fill(tree_fit.begin(), tree_fit.end(), 0.0);
    tree.add_training_fit(tree_fit);
    for (std::size_t i = 0; i < n; ++i) partial[i] = r[i] - (total_fit_[i] - tree_fit[i]);

    auto sum_rows = [&](const std::vector<std::int32_t>& rows) {
      double s = 0.0;
      for (std::int32_t i : rows) s += partial[static_cast<std::size_t>(i)];
      return s;
    };

    TreeMove mv = propose_move(tree, X, hyper_, rng);
    ++n_proposals_;
    if (mv.valid) {
      double log_ratio = mv.log_structure;
      switch (mv.kind) {
        case MoveKind::Grow: {
          const double sl = sum_rows(mv.rows_left);
          const double sr = sum_rows(mv.rows_right);
          log_ratio += leaf_loglik(static_cast<double>(mv.rows_left.size()), sl, sigma2_, sigma_mu2) +
                       leaf_loglik(static_cast<double>(mv.rows_right.size()), sr, sigma2_, sigma_mu2) -
                       leaf_loglik(static_cast<double>(mv.rows_left.size() + mv.rows_right.size()), sl + sr, sigma2_,
                                   sigma_mu2);
          break;
        }
        case MoveKind::Prune: {
          const auto& nd = tree.node(mv.node);
          const auto& ln = tree.node(nd.left);
          const auto& rn = tree.node(nd.right);
          const double sl = sum_rows(ln.rows);
          const double sr = sum_rows(rn.rows);
          log_ratio += leaf_loglik(static_cast<double>(ln.rows.size() + rn.rows.size()), sl + sr, sigma2_,
                                   sigma_mu2) -
                       leaf_loglik(static_cast<double>(ln.rows.size()), sl, sigma2_, sigma_mu2) -
                       leaf_loglik(static_cast<double>(rn.rows.size()), sr, sigma2_, sigma_mu2);
          break;
        }
        case MoveKind::Change:
        case MoveKind::Swap: {
          for (const auto& [leaf, new_rows] : mv.new_leaf_rows) {
            const auto& old_rows = tree.node(leaf).rows;
            log_ratio += leaf_loglik(static_cast<double>(new_rows.size()), sum_rows(new_rows), sigma2_, sigma_mu2) -
                         leaf_loglik(static_cast<double>(old_rows.size()), sum_rows(old_rows), sigma2_, sigma_mu2);
          }
          break;
        }
      }
      if (std::log(rng.uniform()) < log_ratio) {
        ++n_accepts_;
        switch (mv.kind) {
          case MoveKind::Grow:
            tree.apply_grow(mv);
            break;
          case MoveKind::Prune:
            tree.apply_prune(mv.node);
            break;
          case MoveKind::Change:
          case MoveKind::Swap:
            tree.apply_reroute(mv);
            break;
        }
      }
    }

    // conjugate leaf draws given the (possibly updated) structure
    for (int leaf : tree.leaves()) {
      const auto& nd = tree.node(leaf);
      const double nn = static_cast<double>(nd.rows.size());
      const double s = sum_rows(nd.rows);
      const double prec = nn / sigma2_ + 1.0 / sigma_mu2;
      const double mean = (s / sigma2_) / prec;
      tree.set_leaf_mu(leaf, rng.normal(mean, std::sqrt(1.0 / prec)));
    }

    // refresh the running total fit for this tree
    for (std::size_t i = 0; i < n; ++i) total_fit_[i] -= tree_fit[i];
    std::fill(tree_fit.begin(), tree_fit.end(), 0.0);
    tree.add_training_fit(tree_fit);
    for (std::size_t i = 0; i < n; ++i) total_fit_[i] += tree_fit[i];
  }

  // sigma^2 | rest ~ (nu*lambda + S) / chisq(nu + n)
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = r[i] - total_fit_[i];
    ss += e * e;
  }
  sigma2_ = (hyper_.nu * hyper_.lambda + ss) / rng.chi_square(hyper_.nu + static_cast<double>(n));
}

std::vector<double> Forest::predict(const PredictorMatrix& X) const {
  if (X.n_cols() != schema_.size()) throw std::invalid_argument("Forest::predict: schema mismatch");
  for (std::size_t j = 0; j < schema_.size(); ++j)
    if (X.column_schema(j).type != schema_[j].type)
      throw std::invalid_argument("Forest::predict: column type mismatch at " + schema_[j].name);
  std::vector<double> out(X.n_rows(), 0.0);
  for (const auto& tree : trees_)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tree.predict_row(X, i);
  return out;
}

std::vector<double> Forest::vip() const {
  std::vector<double> counts(schema_.size(), 0.0);
  double total = 0.0;
  for (const auto& tree : trees_)
    for (int id : tree.internal_nodes()) {
      counts[static_cast<std::size_t>(tree.node(id).var)] += 1.0;
      total += 1.0;
    }
  if (total > 0.0)
    for (double& c : counts) c /= total;
  return counts;
}

double Forest::mean_leaf_depth() const {
  double sum = 0.0, cnt = 0.0;
  for (const auto& tree : trees_)
    for (int leaf : tree.leaves()) {
      sum += tree.depth(leaf);
      cnt += 1.0;
    }
  return cnt > 0 ? sum / cnt : 0.0;
}

std::size_t Forest::n_internal_nodes() const {
  std::size_t total = 0;
  for (const auto& tree : trees_) total += tree.internal_nodes().size();
  return total;
}

Forest Forest::compact_copy() const {
  Forest f(*this);
  for (auto& tree : f.trees_) tree.strip_rows();
  f.total_fit_.clear();
  f.total_fit_.shrink_to_fit();
  return f;
}

std::string Forest::serialize() const {
  nlohmann::json hdr;
  hdr["m"] = m();
  hdr["sigma2"] = sigma2_;
  hdr["n_train"] = n_train_;
  hdr["hyper"] = {{"depth_base", hyper_.depth_base}, {"depth_power", hyper_.depth_power},
                  {"leaf_k", hyper_.leaf_k},         {"sigma_mu", hyper_.sigma_mu},
                  {"nu", hyper_.nu},                 {"lambda", hyper_.lambda},
                  {"node_min", hyper_.node_min},     {"p_grow", hyper_.p_grow},
                  {"p_prune", hyper_.p_prune},       {"p_change", hyper_.p_change},
                  {"p_swap", hyper_.p_swap},         {"n_cut_candidates", hyper_.n_cut_candidates}};
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema_)
    cols.push_back({{"name", c.name}, {"cat", c.type == ColumnType::Categorical}, {"codes", c.n_codes}});
  hdr["schema"] = cols;
  std::string out = hdr.dump();
  out += '\n';
  for (const auto& tree : trees_) {
    tree.serialize_preorder(out);
    out += '\n';
  }
  return out;
}

Forest Forest::deserialize(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("Forest::deserialize: missing header");
  const nlohmann::json hdr = nlohmann::json::parse(line);
  Forest f;
  f.sigma2_ = hdr["sigma2"].get<double>();
  f.n_train_ = hdr["n_train"].get<std::size_t>();
  const auto& h = hdr["hyper"];
  f.hyper_.m = hdr["m"].get<int>();
  f.hyper_.depth_base = h["depth_base"].get<double>();
  f.hyper_.depth_power = h["depth_power"].get<double>();
  f.hyper_.leaf_k = h["leaf_k"].get<double>();
  f.hyper_.sigma_mu = h["sigma_mu"].get<double>();
  f.hyper_.nu = h["nu"].get<double>();
  f.hyper_.lambda = h["lambda"].get<double>();
  f.hyper_.node_min = h["node_min"].get<int>();
  f.hyper_.p_grow = h["p_grow"].get<double>();
  f.hyper_.p_prune = h["p_prune"].get<double>();
  f.hyper_.p_change = h["p_change"].get<double>();
  f.hyper_.p_swap = h["p_swap"].get<double>();
  f.hyper_.n_cut_candidates = h["n_cut_candidates"].get<int>();
  for (const auto& c : hdr["schema"]) {
    PredictorColumn col;
    col.name = c["name"].get<std::string>();
    col.type = c["cat"].get<bool>() ? ColumnType::Categorical : ColumnType::Continuous;
    col.n_codes = c["codes"].get<int>();
    f.schema_.push_back(col);
  }
  for (int t = 0; t < f.hyper_.m; ++t) {
    if (!std::getline(in, line)) throw std::runtime_error("Forest::deserialize: truncated tree records");
    f.trees_.push_back(DecisionTree::deserialize_preorder(line, f.n_train_));
  }
  f.total_fit_.assign(f.n_train_, 0.0);
  return f;
}

Forest Forest::deserialize(const std::string& text) {
  std::istringstream in(text);
  return deserialize(in);
}

}  // namespace riaft
