#include "riaft/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace riaft {

PredictorMatrix PredictorMatrix::from_dataset(const SurvivalDataset& ds, bool include_treatment) {
  std::vector<std::vector<double>> cols;
  std::vector<PredictorColumn> schema;
  if (include_treatment && ds.has_treatment()) {
    std::vector<double> a(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) a[i] = static_cast<double>(ds.treatment[i] - 1);
    cols.push_back(std::move(a));
    schema.push_back({"a", ColumnType::Categorical, ds.n_arms});
  }
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) {
    if (ds.mask.cols[j].size() == ds.n())
      for (auto b : ds.mask.cols[j])
        if (b) throw DataError("predictor matrix requires complete covariates: " + ds.column_names[j]);
    cols.push_back(ds.X[j]);
    int codes = ds.column_types[j] == ColumnType::Categorical ? static_cast<int>(ds.levels[j].size()) : 0;
    schema.push_back({ds.column_names[j], ds.column_types[j], codes});
  }
  return PredictorMatrix(std::move(cols), std::move(schema));
}

void PredictorMatrix::fill_column(std::size_t j, double value) {
  std::fill(cols_[j].begin(), cols_[j].end(), value);
}

double BartHyper::p_split(int depth) const {
  return depth_base * std::pow(1.0 + static_cast<double>(depth), -depth_power);
}

DecisionTree::DecisionTree(std::size_t n_rows) {
  Node root;
  root.rows.resize(n_rows);
  std::iota(root.rows.begin(), root.rows.end(), 0);
  nodes_.push_back(std::move(root));
}

int DecisionTree::allocate_node() {
  if (!free_list_.empty()) {
    int id = free_list_.back();
    free_list_.pop_back();
    nodes_[static_cast<std::size_t>(id)] = Node{};
    return id;
  }
  nodes_.push_back(Node{});
  return static_cast<int>(nodes_.size()) - 1;
}

void DecisionTree::free_node(int id) {
  nodes_[static_cast<std::size_t>(id)].var = -2;
  nodes_[static_cast<std::size_t>(id)].rows.clear();
  nodes_[static_cast<std::size_t>(id)].rows.shrink_to_fit();
  free_list_.push_back(id);
}

std::size_t DecisionTree::n_live_nodes() const {
  return nodes_.size() - free_list_.size();
}

void DecisionTree::collect(int id, std::vector<int>& out, int what) const {
  const Node& nd = nodes_[static_cast<std::size_t>(id)];
  if (nd.is_leaf()) {
    if (what == 0) out.push_back(id);
    return;
  }
  const bool lchild_leaf = nodes_[static_cast<std::size_t>(nd.left)].is_leaf();
  const bool rchild_leaf = nodes_[static_cast<std::size_t>(nd.right)].is_leaf();
  if (what == 1) out.push_back(id);
  if (what == 2 && lchild_leaf && rchild_leaf) out.push_back(id);
  collect(nd.left, out, what);
  collect(nd.right, out, what);
}

std::vector<int> DecisionTree::leaves() const {
  std::vector<int> out;
  collect(0, out, 0);
  return out;
}

std::vector<int> DecisionTree::internal_nodes() const {
  std::vector<int> out;
  collect(0, out, 1);
  return out;
}

std::vector<int> DecisionTree::nog_nodes() const {
  std::vector<int> out;
  collect(0, out, 2);
  return out;
}

std::vector<int> DecisionTree::swappable_children() const {
  std::vector<int> out;
  for (int id : internal_nodes()) {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.parent >= 0) out.push_back(id);
  }
  return out;
}

int DecisionTree::depth(int id) const {
  int d = 0;
  while (nodes_[static_cast<std::size_t>(id)].parent >= 0) {
    id = nodes_[static_cast<std::size_t>(id)].parent;
    ++d;
  }
  return d;
}

int DecisionTree::max_depth() const {
  int best = 0;
  for (int id : leaves()) best = std::max(best, depth(id));
  return best;
}

double DecisionTree::predict_row(const PredictorMatrix& X, std::size_t row) const {
  int id = 0;
  for (;;) {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.is_leaf()) return nd.mu;
    const PredictorColumn& sc = X.column_schema(static_cast<std::size_t>(nd.var));
    const double v = X.at(row, static_cast<std::size_t>(nd.var));
    if (sc.type == ColumnType::Categorical) {
      const long code = static_cast<long>(v);
      const bool left = (code < 0 || code >= sc.n_codes || code >= 64) ? true : ((nd.cats_left >> code) & 1ULL);
      id = left ? nd.left : nd.right;
    } else {
      id = v <= nd.threshold ? nd.left : nd.right;
    }
  }
}

void DecisionTree::add_training_fit(std::vector<double>& fit) const {
  for (int id : leaves()) {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    for (std::int32_t r : nd.rows) fit[static_cast<std::size_t>(r)] += nd.mu;
  }
}

void DecisionTree::apply_grow(const TreeMove& mv) {
  const int l = allocate_node();
  const int r = allocate_node();
  Node& parent = nodes_[static_cast<std::size_t>(mv.node)];
  parent.var = mv.var;
  parent.threshold = mv.threshold;
  parent.cats_left = mv.cats_left;
  parent.left = l;
  parent.right = r;
  Node& ln = nodes_[static_cast<std::size_t>(l)];
  Node& rn = nodes_[static_cast<std::size_t>(r)];
  ln.parent = mv.node;
  rn.parent = mv.node;
  ln.mu = parent.mu;
  rn.mu = parent.mu;
  ln.rows = mv.rows_left;
  rn.rows = mv.rows_right;
  parent.rows.clear();
  parent.rows.shrink_to_fit();
}

void DecisionTree::apply_prune(int nog_node) {
  Node& nd = nodes_[static_cast<std::size_t>(nog_node)];
  Node& ln = nodes_[static_cast<std::size_t>(nd.left)];
  Node& rn = nodes_[static_cast<std::size_t>(nd.right)];
  nd.rows.reserve(ln.rows.size() + rn.rows.size());
  nd.rows = ln.rows;
  nd.rows.insert(nd.rows.end(), rn.rows.begin(), rn.rows.end());
  free_node(nd.left);
  free_node(nd.right);
  nd.var = -1;
  nd.left = nd.right = -1;
  nd.threshold = 0.0;
  nd.cats_left = 0;
}

void DecisionTree::apply_reroute(const TreeMove& mv) {
  if (mv.kind == MoveKind::Change) {
    Node& nd = nodes_[static_cast<std::size_t>(mv.node)];
    nd.var = mv.var;
    nd.threshold = mv.threshold;
    nd.cats_left = mv.cats_left;
  } else {  // swap rules between parent and child
    Node& p = nodes_[static_cast<std::size_t>(mv.swap_parent)];
    Node& c = nodes_[static_cast<std::size_t>(mv.node)];
    std::swap(p.var, c.var);
    std::swap(p.threshold, c.threshold);
    std::swap(p.cats_left, c.cats_left);
  }
  for (const auto& [leaf, rows] : mv.new_leaf_rows) nodes_[static_cast<std::size_t>(leaf)].rows = rows;
}

void DecisionTree::strip_rows() {
  for (auto& nd : nodes_) {
    nd.rows.clear();
    nd.rows.shrink_to_fit();
  }
}

void DecisionTree::rebind_rows(const PredictorMatrix& X) {
  for (auto& nd : nodes_)
    if (!nd.is_freed()) nd.rows.clear();
  const std::size_t n = X.n_rows();
  for (std::size_t i = 0; i < n; ++i) {
    int id = 0;
    for (;;) {
      Node& nd = nodes_[static_cast<std::size_t>(id)];
      if (nd.is_leaf()) {
        nd.rows.push_back(static_cast<std::int32_t>(i));
        break;
      }
      const PredictorColumn& sc = X.column_schema(static_cast<std::size_t>(nd.var));
      const double v = X.at(i, static_cast<std::size_t>(nd.var));
      bool left;
      if (sc.type == ColumnType::Categorical) {
        const long code = static_cast<long>(v);
        left = (code < 0 || code >= sc.n_codes || code >= 64) ? true : ((nd.cats_left >> code) & 1ULL);
      } else {
        left = v <= nd.threshold;
      }
      id = left ? nd.left : nd.right;
    }
  }
}

namespace {

void serialize_node(const DecisionTree& t, int id, nlohmann::json& arr) {
  const auto& nd = t.node(id);
  if (nd.is_leaf()) {
    arr.push_back({{"mu", nd.mu}});
    return;
  }
  nlohmann::json rec{{"v", nd.var}};
  if (nd.cats_left != 0) {
    std::vector<int> codes;
    for (int c = 0; c < 64; ++c)
      if ((nd.cats_left >> c) & 1ULL) codes.push_back(c);
    rec["cats"] = codes;
  } else {
    rec["t"] = nd.threshold;
  }
  arr.push_back(std::move(rec));
  serialize_node(t, nd.left, arr);
  serialize_node(t, nd.right, arr);
}

}  // namespace

void DecisionTree::serialize_preorder(std::string& out) const {
  nlohmann::json arr = nlohmann::json::array();
  serialize_node(*this, 0, arr);
  out += arr.dump();
}

DecisionTree DecisionTree::deserialize_preorder(const std::string& line, std::size_t n_rows) {
  const nlohmann::json arr = nlohmann::json::parse(line);
  DecisionTree t(n_rows);
  std::size_t pos = 0;
  // recursive build over the preorder list
  struct Builder {
    const nlohmann::json& arr;
    DecisionTree& t;
    std::size_t& pos;
    void build(int id) {
      const auto& rec = arr.at(pos++);
      Node& nd = t.nodes_[static_cast<std::size_t>(id)];
      if (rec.contains("mu")) {
        nd.mu = rec["mu"].get<double>();
        return;
      }
      nd.var = rec["v"].get<std::int32_t>();
      if (rec.contains("cats")) {
        nd.cats_left = 0;
        for (int c : rec["cats"].get<std::vector<int>>()) nd.cats_left |= 1ULL << c;
      } else {
        nd.threshold = rec["t"].get<double>();
      }
      const int l = t.allocate_node();
      const int r = t.allocate_node();
      t.nodes_[static_cast<std::size_t>(id)].left = l;
      t.nodes_[static_cast<std::size_t>(id)].right = r;
      t.nodes_[static_cast<std::size_t>(l)].parent = id;
      t.nodes_[static_cast<std::size_t>(r)].parent = id;
      build(l);
      build(t.nodes_[static_cast<std::size_t>(id)].right);
    }
  } builder{arr, t, pos};
  builder.build(0);
  if (!t.nodes_[0].is_leaf()) {
    t.nodes_[0].rows.clear();
    t.nodes_[0].rows.shrink_to_fit();
  }
  return t;
}

std::vector<double> continuous_split_candidates(const std::vector<double>& in_node_values, int n_candidates,
                                                int min_child) {
  const std::size_t n = in_node_values.size();
  std::vector<double> out;
  if (n < 2 * static_cast<std::size_t>(min_child)) return out;
  std::vector<double> v(in_node_values);
  std::sort(v.begin(), v.end());
  const double lo = v.front(), hi = v.back();
  if (lo == hi) return out;
  out.reserve(static_cast<std::size_t>(n_candidates));
  double last = lo;  // sentinel: candidates must exceed lo (strictly inside the range)
  for (int i = 1; i <= n_candidates; ++i) {
    const double q = static_cast<double>(i) / (static_cast<double>(n_candidates) + 1.0);
    const std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(n - 1));  // lower tie-break
    const double t = v[idx];
    if (t <= last || t >= hi) continue;
    // rows with value <= t go left
    const std::size_t n_left = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
    if (n_left < static_cast<std::size_t>(min_child) || n - n_left < static_cast<std::size_t>(min_child)) continue;
    out.push_back(t);
    last = t;
  }
  return out;
}

namespace {

struct NodeStats {
  std::vector<double> values;
};

// Draw a split rule for `var` at a node; returns false when no valid rule.
bool draw_rule(const DecisionTree& tree, const PredictorMatrix& X, const BartHyper& hyper,
               const std::vector<std::int32_t>& rows, int var, Rng& rng, double& threshold,
               std::uint64_t& cats_left) {
  const PredictorColumn& sc = X.column_schema(static_cast<std::size_t>(var));
  const std::vector<double>& col = X.col(static_cast<std::size_t>(var));
  if (sc.type == ColumnType::Continuous) {
    std::vector<double> vals(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = col[static_cast<std::size_t>(rows[i])];
    const auto cands = continuous_split_candidates(vals, hyper.n_cut_candidates, hyper.node_min);
    if (cands.empty()) return false;
    threshold = cands[static_cast<std::size_t>(rng.uniform_below(cands.size()))];
    cats_left = 0;
    return true;
  }
  // categorical: uniform nonempty proper subset of the codes present in-node
  std::uint64_t present = 0;
  for (std::int32_t r : rows) {
    const long code = static_cast<long>(col[static_cast<std::size_t>(r)]);
    if (code >= 0 && code < 64) present |= 1ULL << code;
  }
  const int c = static_cast<int>(__builtin_popcountll(present));
  if (c < 2) return false;
  std::vector<int> codes;
  for (int b = 0; b < 64; ++b)
    if ((present >> b) & 1ULL) codes.push_back(b);
  for (int attempt = 0; attempt < 30; ++attempt) {
    std::uint64_t mask = 0;
    for (int cd : codes)
      if (rng.uniform() < 0.5) mask |= 1ULL << cd;
    if (mask == 0 || mask == present) continue;
    // enforce child minimums
    std::size_t nl = 0;
    for (std::int32_t r : rows) {
      const long code = static_cast<long>(col[static_cast<std::size_t>(r)]);
      const bool left = (code < 0 || code >= 64) ? true : ((mask >> code) & 1ULL);
      nl += left;
    }
    if (nl < static_cast<std::size_t>(hyper.node_min) || rows.size() - nl < static_cast<std::size_t>(hyper.node_min))
      continue;
    threshold = 0.0;
    cats_left = mask;
    return true;
  }
  (void)tree;
  return false;
}

void partition_rows(const PredictorMatrix& X, const DecisionTree::Node& rule, const std::vector<std::int32_t>& rows,
                    std::vector<std::int32_t>& left, std::vector<std::int32_t>& right) {
  const PredictorColumn& sc = X.column_schema(static_cast<std::size_t>(rule.var));
  const std::vector<double>& col = X.col(static_cast<std::size_t>(rule.var));
  left.clear();
  right.clear();
  for (std::int32_t r : rows) {
    const double v = col[static_cast<std::size_t>(r)];
    bool go_left;
    if (sc.type == ColumnType::Categorical) {
      const long code = static_cast<long>(v);
      go_left = (code < 0 || code >= sc.n_codes || code >= 64) ? true : ((rule.cats_left >> code) & 1ULL);
    } else {
      go_left = v <= rule.threshold;
    }
    (go_left ? left : right).push_back(r);
  }
}

// Routes `rows` through the subtree at `sub`, filling per-leaf lists; returns
// false if any leaf ends below node_min.
bool reroute_subtree(const DecisionTree& tree, const PredictorMatrix& X, int sub,
                     const std::vector<std::int32_t>& rows, const TreeMove& mv, int node_min,
                     std::vector<std::pair<int, std::vector<std::int32_t>>>& out) {
  // working rule lookup honoring the proposed (not yet applied) rules
  auto rule_at = [&](int id) {
    DecisionTree::Node rule = tree.node(id);
    if (mv.kind == MoveKind::Change && id == mv.node) {
      rule.var = mv.var;
      rule.threshold = mv.threshold;
      rule.cats_left = mv.cats_left;
    } else if (mv.kind == MoveKind::Swap) {
      if (id == mv.swap_parent) {
        const auto& c = tree.node(mv.node);
        rule.var = c.var;
        rule.threshold = c.threshold;
        rule.cats_left = c.cats_left;
      } else if (id == mv.node) {
        const auto& p = tree.node(mv.swap_parent);
        rule.var = p.var;
        rule.threshold = p.threshold;
        rule.cats_left = p.cats_left;
      }
    }
    return rule;
  };
  struct Frame {
    int id;
    std::vector<std::int32_t> rows;
  };
  std::vector<Frame> stack;
  stack.push_back({sub, rows});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const auto& nd = tree.node(f.id);
    if (nd.is_leaf()) {
      if (f.rows.size() < static_cast<std::size_t>(node_min)) return false;
      out.emplace_back(f.id, std::move(f.rows));
      continue;
    }
    const DecisionTree::Node rule = rule_at(f.id);
    std::vector<std::int32_t> l, r;
    partition_rows(X, rule, f.rows, l, r);
    stack.push_back({nd.left, std::move(l)});
    stack.push_back({nd.right, std::move(r)});
  }
  return true;
}

std::vector<std::int32_t> subtree_rows(const DecisionTree& tree, int sub) {
  std::vector<std::int32_t> rows;
  std::vector<int> stack{sub};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const auto& nd = tree.node(id);
    if (nd.is_leaf()) {
      rows.insert(rows.end(), nd.rows.begin(), nd.rows.end());
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  return rows;
}

}  // namespace

TreeMove propose_move(const DecisionTree& tree, const PredictorMatrix& X, const BartHyper& hyper, Rng& rng) {
  TreeMove mv;
  const double u = rng.uniform();
  if (u < hyper.p_grow)
    mv.kind = MoveKind::Grow;
  else if (u < hyper.p_grow + hyper.p_prune)
    mv.kind = MoveKind::Prune;
  else if (u < hyper.p_grow + hyper.p_prune + hyper.p_change)
    mv.kind = MoveKind::Change;
  else
    mv.kind = MoveKind::Swap;

  const std::size_t p = X.n_cols();

  switch (mv.kind) {
    case MoveKind::Grow: {
      const auto lv = tree.leaves();
      mv.node = lv[static_cast<std::size_t>(rng.uniform_below(lv.size()))];
      const auto& rows = tree.node(mv.node).rows;
      if (rows.size() < 2 * static_cast<std::size_t>(hyper.node_min)) return mv;
      mv.var = static_cast<int>(rng.uniform_below(p));
      if (!draw_rule(tree, X, hyper, rows, mv.var, rng, mv.threshold, mv.cats_left)) return mv;
      DecisionTree::Node rule;
      rule.var = mv.var;
      rule.threshold = mv.threshold;
      rule.cats_left = mv.cats_left;
      partition_rows(X, rule, rows, mv.rows_left, mv.rows_right);
      if (mv.rows_left.size() < static_cast<std::size_t>(hyper.node_min) ||
          mv.rows_right.size() < static_cast<std::size_t>(hyper.node_min))
        return mv;
      const int d = tree.depth(mv.node);
      const double ps_d = hyper.p_split(d);
      const double ps_d1 = hyper.p_split(d + 1);
      // nog count after the grow: the grown leaf becomes a nog node; its
      // parent stops being one if it was.
      int nog_after = static_cast<int>(tree.nog_nodes().size()) + 1;
      const int parent = tree.node(mv.node).parent;
      if (parent >= 0) {
        const auto& pn = tree.node(parent);
        const int sibling = pn.left == mv.node ? pn.right : pn.left;
        if (tree.node(sibling).is_leaf()) nog_after -= 1;
      }
      mv.log_structure = std::log(hyper.p_prune) + std::log(static_cast<double>(lv.size())) -
                         std::log(hyper.p_grow) - std::log(static_cast<double>(nog_after)) + std::log(ps_d) +
                         2.0 * std::log(1.0 - ps_d1) - std::log(1.0 - ps_d);
      mv.valid = true;
      return mv;
    }
    case MoveKind::Prune: {
      const auto nog = tree.nog_nodes();
      if (nog.empty()) return mv;
      mv.node = nog[static_cast<std::size_t>(rng.uniform_below(nog.size()))];
      const int d = tree.depth(mv.node);
      const double ps_d = hyper.p_split(d);
      const double ps_d1 = hyper.p_split(d + 1);
      const std::size_t leaves_after = tree.leaves().size() - 1;
      mv.log_structure = std::log(hyper.p_grow) + std::log(static_cast<double>(nog.size())) -
                         std::log(hyper.p_prune) - std::log(static_cast<double>(leaves_after)) +
                         std::log(1.0 - ps_d) - std::log(ps_d) - 2.0 * std::log(1.0 - ps_d1);
      mv.valid = true;
      return mv;
    }
    case MoveKind::Change: {
      const auto internal = tree.internal_nodes();
      if (internal.empty()) return mv;
      mv.node = internal[static_cast<std::size_t>(rng.uniform_below(internal.size()))];
      const auto rows = subtree_rows(tree, mv.node);
      mv.var = static_cast<int>(rng.uniform_below(p));
      if (!draw_rule(tree, X, hyper, rows, mv.var, rng, mv.threshold, mv.cats_left)) return mv;
      if (!reroute_subtree(tree, X, mv.node, rows, mv, hyper.node_min, mv.new_leaf_rows)) return mv;
      mv.log_structure = 0.0;  // proposal symmetric; rule prior cancels
      mv.valid = true;
      return mv;
    }
    case MoveKind::Swap: {
      const auto cands = tree.swappable_children();
      if (cands.empty()) return mv;
      mv.node = cands[static_cast<std::size_t>(rng.uniform_below(cands.size()))];
      mv.swap_parent = tree.node(mv.node).parent;
      const auto rows = subtree_rows(tree, mv.swap_parent);
      if (!reroute_subtree(tree, X, mv.swap_parent, rows, mv, hyper.node_min, mv.new_leaf_rows)) return mv;
      mv.log_structure = 0.0;
      mv.valid = true;
      return mv;
    }
  }
  return mv;
}

}  // namespace riaft
