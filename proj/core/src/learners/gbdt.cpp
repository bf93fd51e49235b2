#include <algorithm>
#include <cmath>
#include <numeric>

#include "fuseval/error.hpp"
#include "params.hpp"

namespace fuseval::detail {

namespace {

// Least-squares regression tree on the per-row gradients, with leaf values
// replaced by a Newton step sum(g)/sum(h). Splits scan every feature; no
// randomness, so boosting is fully deterministic.
struct GradTreeBuilder {
  const Matrix& x;
  const std::vector<double>& grad;     // residuals y - p
  const std::vector<double>& hessian;  // p (1 - p)
  int max_depth;

  struct Split {
    double score = -1.0;
    int feature = -1;
    double threshold = 0.0;
  };

  Split best_split(const std::vector<std::size_t>& rows) const {
    const std::size_t n = rows.size();
    double total = 0.0;
    for (std::size_t r : rows) total += grad[r];
    const double parent_score = total * total / static_cast<double>(n);

    Split best;
    std::vector<std::pair<double, double>> ordered(n);  // (x, grad)
    for (std::size_t f = 0; f < x.cols(); ++f) {
      for (std::size_t i = 0; i < n; ++i)
        ordered[i] = {x.at(rows[i], f), grad[rows[i]]};
      std::sort(ordered.begin(), ordered.end());

      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += ordered[i].second;
        if (ordered[i].first == ordered[i + 1].first) continue;
        const double right_sum = total - left_sum;
        const std::size_t ln = i + 1, rn = n - ln;
        const double score = left_sum * left_sum / static_cast<double>(ln) +
                             right_sum * right_sum / static_cast<double>(rn) -
                             parent_score;
        if (score > best.score + 1e-15) {
          best.score = score;
          best.feature = static_cast<int>(f);
          best.threshold = (ordered[i].first + ordered[i + 1].first) / 2.0;
        }
      }
    }
    return best;
  }

  double leaf_value(const std::vector<std::size_t>& rows) const {
    double g = 0.0, h = 0.0;
    for (std::size_t r : rows) {
      g += grad[r];
      h += hessian[r];
    }
    return g / std::max(h, 1e-12);
  }

  int build(Tree& tree, std::vector<std::size_t>& rows, int depth) const {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    Split split;
    if (depth < max_depth && rows.size() >= 2) split = best_split(rows);
    if (split.feature < 0 || split.score <= 1e-12) {
      tree.nodes[static_cast<std::size_t>(index)].value = leaf_value(rows);
      return index;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      if (x.at(r, static_cast<std::size_t>(split.feature)) < split.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left = build(tree, left_rows, depth + 1);
    const int right = build(tree, right_rows, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return index;
  }
};

}  // namespace

GbdtParams train_gbdt(const Matrix& x, const std::vector<int>& y,
                      const TrainConfig& cfg, TrainMeta& meta) {
  const std::size_t n = x.rows();
  std::size_t pos = 0;
  for (int label : y) pos += static_cast<std::size_t>(label == 1);
  const double prevalence = static_cast<double>(pos) / static_cast<double>(n);

  GbdtParams model;
  model.base_score = std::log(prevalence / (1.0 - prevalence));
  model.shrinkage = cfg.gbdt_shrinkage;

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n), hessian(n);
  meta.loss_curve.clear();
  meta.loss_curve.reserve(static_cast<std::size_t>(cfg.gbdt_rounds) + 1);

  auto mean_loss = [&]() {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += bce_from_logit(margin[i], y[i]);
    return loss / static_cast<double>(n);
  };
  meta.loss_curve.push_back(mean_loss());

  for (int round = 0; round < cfg.gbdt_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = static_cast<double>(y[i]) - p;
      hessian[i] = p * (1.0 - p);
    }
    GradTreeBuilder builder{x, grad, hessian, cfg.gbdt_depth};
    Tree tree;
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    builder.build(tree, rows, 0);

    for (std::size_t i = 0; i < n; ++i)
      margin[i] += model.shrinkage * tree.eval(x.row(i));
    model.trees.push_back(std::move(tree));
    meta.loss_curve.push_back(mean_loss());
  }

  meta.epochs_run = cfg.gbdt_rounds;
  meta.final_valid_loss = 0.0;
  return model;
}

std::vector<double> predict_gbdt(const GbdtParams& p, const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double margin = p.base_score;
    for (const auto& tree : p.trees) margin += p.shrinkage * tree.eval(x.row(i));
    out.push_back(sigmoid(margin));
  }
  return out;
}

}  // namespace fuseval::detail
