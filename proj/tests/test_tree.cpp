#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "riaft/rng.hpp"
#include "riaft/tree.hpp"

using namespace riaft;

namespace {

PredictorMatrix make_matrix(std::vector<std::vector<double>> cols) {
  std::vector<PredictorColumn> schema;
  for (std::size_t j = 0; j < cols.size(); ++j)
    schema.push_back({"x" + std::to_string(j + 1), ColumnType::Continuous, 0});
  return PredictorMatrix(std::move(cols), std::move(schema));
}

TreeMove make_grow(const DecisionTree& tree, const PredictorMatrix& X, int leaf, int var, double threshold) {
  TreeMove mv;
  mv.kind = MoveKind::Grow;
  mv.valid = true;
  mv.node = leaf;
  mv.var = var;
  mv.threshold = threshold;
  for (std::int32_t r : tree.node(leaf).rows)
    (X.at(static_cast<std::size_t>(r), static_cast<std::size_t>(var)) <= threshold ? mv.rows_left : mv.rows_right)
        .push_back(r);
  return mv;
}

}  // namespace

TEST_CASE("continuous split candidates: strict interior, node_min, lower tie-break") {
  // 10 values 0..9: candidates must exclude the extremes and honor min_child
  std::vector<double> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto cands = continuous_split_candidates(v, 100, 3);
  CHECK(!cands.empty());
  for (double c : cands) {
    CHECK(c > 0.0);
    CHECK(c < 9.0);
    const auto n_left = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), c) - v.begin());
    CHECK(n_left >= 3);
    CHECK(v.size() - n_left >= 3);
  }
  CHECK(std::is_sorted(cands.begin(), cands.end()));

  // constant column: nothing to split on
  CHECK(continuous_split_candidates({1, 1, 1, 1, 1, 1, 1, 1}, 100, 1).empty());
  // too few rows for two children
  CHECK(continuous_split_candidates({1, 2, 3}, 100, 2).empty());

  // candidate values are order statistics of the in-node values (lower tie-break)
  std::vector<double> w{0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.5, 3.5, 10.0};
  for (double c : continuous_split_candidates(w, 100, 1))
    CHECK(std::find(w.begin(), w.end(), c) != w.end());
}

TEST_CASE("grow then prune restores the original tree") {
  const std::size_t n = 40;
  std::vector<double> x(n);
  Rng rng(4);
  for (auto& v : x) v = rng.uniform();
  const auto X = make_matrix({x});
  DecisionTree tree(n);
  const auto rows_before = tree.node(0).rows;

  const auto mv = make_grow(tree, X, 0, 0, 0.5);
  tree.apply_grow(mv);
  CHECK(tree.leaves().size() == 2);
  CHECK(tree.internal_nodes().size() == 1);
  CHECK(tree.nog_nodes() == std::vector<int>{0});
  CHECK(tree.node(tree.node(0).left).rows.size() + tree.node(tree.node(0).right).rows.size() == n);

  tree.apply_prune(0);
  CHECK(tree.leaves().size() == 1);
  CHECK(tree.n_live_nodes() == 1);
  auto rows_after = tree.node(0).rows;
  std::sort(rows_after.begin(), rows_after.end());
  CHECK(rows_after == rows_before);
}

TEST_CASE("single-leaf tree: only grow is proposable") {
  const std::size_t n = 60;
  std::vector<double> x(n);
  Rng rng(9);
  for (auto& v : x) v = rng.uniform();
  const auto X = make_matrix({x});
  DecisionTree tree(n);
  BartHyper hyper;
  Rng prng(17);
  int valid_grow = 0, invalid_other = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto mv = propose_move(tree, X, hyper, prng);
    if (mv.valid) {
      CHECK(mv.kind == MoveKind::Grow);
      ++valid_grow;
    } else {
      CHECK(mv.kind != MoveKind::Grow);
      ++invalid_other;
    }
  }
  CHECK(valid_grow > 0);
  CHECK(invalid_other > 0);
}

TEST_CASE("move kinds are drawn with the configured probabilities") {
  // depth-2 tree where every kind has candidates
  const std::size_t n = 400;
  std::vector<double> x1(n), x2(n);
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = rng.uniform();
    x2[i] = rng.uniform();
  }
  const auto X = make_matrix({x1, x2});
  DecisionTree tree(n);
  tree.apply_grow(make_grow(tree, X, 0, 0, 0.5));
  tree.apply_grow(make_grow(tree, X, tree.node(0).left, 1, 0.5));

  BartHyper hyper;
  Rng prng(23);
  std::map<MoveKind, int> counts;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) counts[propose_move(tree, X, hyper, prng).kind]++;
  CHECK(static_cast<double>(counts[MoveKind::Grow]) / trials == doctest::Approx(0.28).epsilon(0.05));
  CHECK(static_cast<double>(counts[MoveKind::Prune]) / trials == doctest::Approx(0.28).epsilon(0.05));
  CHECK(static_cast<double>(counts[MoveKind::Change]) / trials == doctest::Approx(0.40).epsilon(0.05));
  CHECK(static_cast<double>(counts[MoveKind::Swap]) / trials == doctest::Approx(0.04).epsilon(0.12));
}

TEST_CASE("categorical routing sends unseen codes left") {
  const std::size_t n = 30;
  std::vector<double> codes(n);
  for (std::size_t i = 0; i < n; ++i) codes[i] = static_cast<double>(i % 3);
  PredictorMatrix X({codes}, {{"g", ColumnType::Categorical, 3}});
  DecisionTree tree(n);
  TreeMove mv;
  mv.kind = MoveKind::Grow;
  mv.valid = true;
  mv.node = 0;
  mv.var = 0;
  mv.cats_left = 0b001;  // only code 0 goes left
  for (std::int32_t r : tree.node(0).rows)
    (static_cast<int>(codes[static_cast<std::size_t>(r)]) == 0 ? mv.rows_left : mv.rows_right).push_back(r);
  tree.apply_grow(mv);
  tree.set_leaf_mu(tree.node(0).left, -1.0);
  tree.set_leaf_mu(tree.node(0).right, 1.0);

  PredictorMatrix unseen({{5.0}}, {{"g", ColumnType::Categorical, 3}});
  CHECK(tree.predict_row(unseen, 0) == -1.0);  // deterministic left
  PredictorMatrix code1({{1.0}}, {{"g", ColumnType::Categorical, 3}});
  CHECK(tree.predict_row(code1, 0) == 1.0);
}

TEST_CASE("preorder serialization round trip") {
  const std::size_t n = 100;
  std::vector<double> x(n);
  Rng rng(31);
  for (auto& v : x) v = rng.normal();
  const auto X = make_matrix({x});
  DecisionTree tree(n);
  tree.apply_grow(make_grow(tree, X, 0, 0, 0.25));
  tree.set_leaf_mu(tree.node(0).left, -0.3333333333333333);
  tree.set_leaf_mu(tree.node(0).right, 1e-17);

  std::string s;
  tree.serialize_preorder(s);
  const auto again = DecisionTree::deserialize_preorder(s, n);
  std::string s2;
  again.serialize_preorder(s2);
  CHECK(s == s2);
  for (std::size_t i = 0; i < n; ++i) CHECK(tree.predict_row(X, i) == again.predict_row(X, i));
}
