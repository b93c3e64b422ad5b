#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riaft/dataset.hpp"
#include "riaft/rng.hpp"

namespace riaft {

struct PredictorColumn {
  std::string name;
  ColumnType type = ColumnType::Continuous;
  int n_codes = 0;  // categorical only
};

// Column-major typed predictor matrix fed to the tree ensemble. Categorical
// columns hold integer codes stored as doubles.
class PredictorMatrix {
 public:
  PredictorMatrix() = default;
  PredictorMatrix(std::vector<std::vector<double>> cols, std::vector<PredictorColumn> schema)
      : cols_(std::move(cols)), schema_(std::move(schema)) {}

  // Covariates of `ds` (callers must have imputed any missing values);
  // when `include_treatment` the arm label becomes categorical column 0.
  static PredictorMatrix from_dataset(const SurvivalDataset& ds, bool include_treatment);

  std::size_t n_rows() const { return cols_.empty() ? 0 : cols_[0].size(); }
  std::size_t n_cols() const { return cols_.size(); }
  double at(std::size_t row, std::size_t col) const { return cols_[col][row]; }
  const std::vector<double>& col(std::size_t j) const { return cols_[j]; }
  const PredictorColumn& column_schema(std::size_t j) const { return schema_[j]; }
  const std::vector<PredictorColumn>& schema() const { return schema_; }

  // Overwrite a column with a constant (counterfactual treatment override).
  void fill_column(std::size_t j, double value);

 private:
  std::vector<std::vector<double>> cols_;
  std::vector<PredictorColumn> schema_;
};

struct BartHyper {
  int m = 200;
  double depth_base = 0.95;   // p(split at depth d) = base * (1+d)^-power
  double depth_power = 2.0;
  double leaf_k = 2.0;        // sigma_mu = range / (2 k sqrt(m))
  double sigma_mu = 0.0;      // <= 0: derive from the response in Forest::init
  double nu = 3.0;            // sigma^2 ~ nu*lambda / chisq(nu)
  double lambda = 0.0;        // <= 0: calibrate from the response in Forest::init
  int node_min = 5;
  double p_grow = 0.28, p_prune = 0.28, p_change = 0.40, p_swap = 0.04;
  int n_cut_candidates = 100;

  double p_split(int depth) const;
};

enum class MoveKind { Grow, Prune, Change, Swap };

struct TreeMove {
  MoveKind kind = MoveKind::Grow;
  bool valid = false;           // null move when false; counted as rejected
  int node = -1;                // grow: leaf; prune: nog; change: internal; swap: child of pair
  int swap_parent = -1;
  int var = -1;
  double threshold = 0.0;
  std::uint64_t cats_left = 0;  // categorical codes routed left
  double log_structure = 0.0;   // transition + tree-prior log ratio (likelihood excluded)
  std::vector<std::int32_t> rows_left, rows_right;                      // grow payload
  std::vector<std::pair<int, std::vector<std::int32_t>>> new_leaf_rows; // change/swap payload
};

// Binary regression tree over a node arena. Leaves cache the training rows
// they own so sufficient statistics and partial fits are O(n) per sweep.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::size_t n_rows);

  struct Node {
    std::int32_t var = -1;  // -1 leaf, -2 freed slot
    double threshold = 0.0;
    std::uint64_t cats_left = 0;
    std::int32_t left = -1, right = -1, parent = -1;
    double mu = 0.0;
    std::vector<std::int32_t> rows;  // populated at leaves
    bool is_leaf() const { return var == -1; }
    bool is_freed() const { return var == -2; }
  };

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int root() const { return 0; }
  std::size_t n_live_nodes() const;
  std::vector<int> leaves() const;
  std::vector<int> internal_nodes() const;
  std::vector<int> nog_nodes() const;  // internal nodes with two leaf children
  // internal nodes whose parent is internal (swap candidates)
  std::vector<int> swappable_children() const;
  int depth(int id) const;
  int max_depth() const;

  double predict_row(const PredictorMatrix& X, std::size_t row) const;
  // Adds each leaf's mu into fit[row] for its cached training rows.
  void add_training_fit(std::vector<double>& fit) const;
  void set_leaf_mu(int id, double mu) { nodes_[static_cast<std::size_t>(id)].mu = mu; }

  void apply_grow(const TreeMove& mv);
  void apply_prune(int nog_node);
  // Installs the rule carried by a change/swap move and the rerouted leaf rows.
  void apply_reroute(const TreeMove& mv);

  // Rebuilds leaf row caches by routing every training row (used after
  // deserialization when further training or VIP-on-rows is needed).
  void rebind_rows(const PredictorMatrix& X);

  // Drops the row caches (compact copies kept per posterior draw).
  void strip_rows();

  // preorder: internal node then left then right subtree
  void serialize_preorder(std::string& out) const;
  static DecisionTree deserialize_preorder(const std::string& line, std::size_t n_rows);

 private:
  int allocate_node();
  void free_node(int id);
  void collect(int id, std::vector<int>& out, int what) const;

  std::vector<Node> nodes_;
  std::vector<int> free_list_;
};

// One Metropolis proposal on a tree: a kind drawn with the configured
// probabilities, a target drawn uniformly among that kind's candidates, and
// the structural part of the acceptance ratio. Residual-dependent pieces are
// added by the sweep. Returns a null move when the drawn kind has no valid
// candidate.
TreeMove propose_move(const DecisionTree& tree, const PredictorMatrix& X, const BartHyper& hyper, Rng& rng);

// Valid split thresholds for a continuous variable at a node: distinct values
// at n_cut_candidates evenly spaced quantile levels of the in-node values
// (ties broken toward the lower order statistic), strictly inside the in-node
// range, and leaving at least min_child rows on each side.
std::vector<double> continuous_split_candidates(const std::vector<double>& in_node_values, int n_candidates,
                                                int min_child);

}  // namespace riaft
