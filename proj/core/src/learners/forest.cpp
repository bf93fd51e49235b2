#include <algorithm>
#include <cmath>
#include <numeric>

#include "fuseval/rng.hpp"
#include "params.hpp"

namespace fuseval::detail {

namespace {

double gini(std::size_t pos, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Best Gini split over the sampled feature subset. Ties keep the first
// candidate in (feature, threshold) order, so tree growth is deterministic.
SplitChoice best_split(const Matrix& x, const std::vector<int>& y,
                       const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& features) {
  const std::size_t n = rows.size();
  std::size_t pos_total = 0;
  for (std::size_t r : rows) pos_total += static_cast<std::size_t>(y[r] == 1);
  const double parent = gini(pos_total, n);

  SplitChoice best;
  std::vector<std::pair<double, int>> ordered(n);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i)
      ordered[i] = {x.at(rows[i], f), y[rows[i]]};
    std::sort(ordered.begin(), ordered.end());

    std::size_t left_n = 0, left_pos = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_pos += static_cast<std::size_t>(ordered[i].second == 1);
      if (ordered[i].first == ordered[i + 1].first) continue;
      const std::size_t right_n = n - left_n;
      const std::size_t right_pos = pos_total - left_pos;
      const double gain = parent -
                          (static_cast<double>(left_n) * gini(left_pos, left_n) +
                           static_cast<double>(right_n) * gini(right_pos, right_n)) /
                              static_cast<double>(n);
      if (gain > best.gain + 1e-15) {
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = (ordered[i].first + ordered[i + 1].first) / 2.0;
      }
    }
  }
  return best;
}

int build_node(Tree& tree, const Matrix& x, const std::vector<int>& y,
               std::vector<std::size_t>& rows, int depth, int max_depth,
               std::size_t n_sub_features, Rng& rng) {
  const std::size_t n = rows.size();
  std::size_t pos = 0;
  for (std::size_t r : rows) pos += static_cast<std::size_t>(y[r] == 1);

  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  auto make_leaf = [&]() {
    tree.nodes[static_cast<std::size_t>(index)].value =
        static_cast<double>(pos) / static_cast<double>(n);
    return index;
  };

  if (depth >= max_depth || n < 2 || pos == 0 || pos == n) return make_leaf();

  // Sample ceil(sqrt(d)) distinct features, then scan them in index order.
  const std::size_t d = x.cols();
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> subset;
  subset.reserve(n_sub_features);
  for (std::size_t i = 0; i < n_sub_features && i < d; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
    std::swap(all[i], all[j]);
    subset.push_back(all[i]);
  }
  std::sort(subset.begin(), subset.end());

  const SplitChoice split = best_split(x, y, rows, subset);
  if (split.feature < 0) return make_leaf();

  std::vector<std::size_t> left_rows, right_rows;
  for (std::size_t r : rows) {
    if (x.at(r, static_cast<std::size_t>(split.feature)) < split.threshold)
      left_rows.push_back(r);
    else
      right_rows.push_back(r);
  }
  if (left_rows.empty() || right_rows.empty()) return make_leaf();

  rows.clear();
  rows.shrink_to_fit();

  const int left = build_node(tree, x, y, left_rows, depth + 1, max_depth,
                              n_sub_features, rng);
  const int right = build_node(tree, x, y, right_rows, depth + 1, max_depth,
                               n_sub_features, rng);
  TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
  node.feature = split.feature;
  node.threshold = split.threshold;
  node.left = left;
  node.right = right;
  return index;
}

}  // namespace

ForestParams train_forest(const Matrix& x, const std::vector<int>& y,
                          const TrainConfig& cfg, TrainMeta& meta) {
  const std::size_t n = x.rows();
  const std::size_t n_sub = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(x.cols()))));

  ForestParams forest;
  forest.trees.reserve(cfg.forest_trees);
  for (std::size_t t = 0; t < cfg.forest_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    Tree tree;
    build_node(tree, x, y, rows, 0, cfg.forest_max_depth, n_sub, rng);
    forest.trees.push_back(std::move(tree));
  }
  meta.epochs_run = static_cast<int>(cfg.forest_trees);
  meta.final_valid_loss = 0.0;
  return forest;
}

std::vector<double> predict_forest(const ForestParams& p, const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sum = 0.0;
    for (const auto& tree : p.trees) sum += tree.eval(x.row(i));
    out.push_back(sum / static_cast<double>(p.trees.size()));
  }
  return out;
}

}  // namespace fuseval::detail
