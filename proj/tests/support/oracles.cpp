#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "fuseval/error.hpp"
#include "fuseval/rng.hpp"

namespace fuseval::testing {

double auc_bruteforce(std::span<const double> scores,
                      std::span<const int> labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  if (pairs == 0) raise(ErrorKind::UndefinedMetric, "single-class oracle input");
  return wins / static_cast<double>(pairs);
}

double chisq_upper_tail_reference(int dof, double x) {
  if (dof < 1) raise(ErrorKind::Argument, "reference needs dof >= 1");
  if (x <= 0.0) return 1.0;
  double q;
  int k;
  if (dof % 2 == 1) {
    q = std::erfc(std::sqrt(x / 2.0));
    k = 1;
  } else {
    q = std::exp(-x / 2.0);
    k = 2;
  }
  while (k + 2 <= dof) {
    q += std::pow(x / 2.0, k / 2.0) * std::exp(-x / 2.0) /
         std::tgamma(k / 2.0 + 1.0);
    k += 2;
  }
  return q;
}

namespace {

std::vector<std::string> leaf_members(const Dendrogram& tree, int node) {
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return {n.model_id};
  auto left = leaf_members(tree, n.left);
  auto right = leaf_members(tree, n.right);
  left.insert(left.end(), right.begin(), right.end());
  std::sort(left.begin(), left.end());
  return left;
}

}  // namespace

std::vector<MergeStep> merge_trace(const Dendrogram& tree) {
  std::vector<MergeStep> trace;
  for (std::size_t i = tree.n_leaves; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    MergeStep step;
    step.left = leaf_members(tree, n.left);
    step.right = leaf_members(tree, n.right);
    if (!(step.left < step.right)) std::swap(step.left, step.right);
    step.height = n.height;
    trace.push_back(std::move(step));
  }
  return trace;
}

std::vector<MergeStep> upgma_bruteforce(const DistanceMatrix& distances) {
  const std::size_t n = distances.size();
  // Clusters as index sets into the original matrix, plus their sorted
  // member-id keys.
  struct Cluster {
    std::vector<std::size_t> leaves;
    std::vector<std::string> key;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < n; ++i)
    clusters.push_back({{i}, {distances.ids[i]}});

  auto mean_distance = [&](const Cluster& a, const Cluster& b) {
    double sum = 0.0;
    for (std::size_t i : a.leaves)
      for (std::size_t j : b.leaves) sum += distances.at(i, j);
    return sum / (static_cast<double>(a.leaves.size()) *
                  static_cast<double>(b.leaves.size()));
  };

  std::vector<MergeStep> trace;
  while (clusters.size() > 1) {
    std::size_t bi = 0, bj = 1;
    double best = mean_distance(clusters[0], clusters[1]);
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = mean_distance(clusters[i], clusters[j]);
        const auto& lo = std::min(clusters[i].key, clusters[j].key);
        const auto& hi = std::max(clusters[i].key, clusters[j].key);
        const auto& blo = std::min(clusters[bi].key, clusters[bj].key);
        const auto& bhi = std::max(clusters[bi].key, clusters[bj].key);
        if (i == 0 && j == 1) continue;
        if (d < best || (d == best && (lo < blo || (lo == blo && hi < bhi)))) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    MergeStep step;
    step.left = std::min(clusters[bi].key, clusters[bj].key);
    step.right = std::max(clusters[bi].key, clusters[bj].key);
    step.height = best;
    trace.push_back(std::move(step));

    Cluster fused;
    fused.leaves = clusters[bi].leaves;
    fused.leaves.insert(fused.leaves.end(), clusters[bj].leaves.begin(),
                        clusters[bj].leaves.end());
    fused.key = clusters[bi].key;
    fused.key.insert(fused.key.end(), clusters[bj].key.begin(),
                     clusters[bj].key.end());
    std::sort(fused.key.begin(), fused.key.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(std::max(bi, bj)));
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(std::min(bi, bj)));
    clusters.push_back(std::move(fused));
  }
  return trace;
}

double knn_score_bruteforce(const Matrix& x_train,
                            const std::vector<int>& y_train,
                            std::span<const double> query, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < x_train.rows(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < x_train.cols(); ++j) {
      const double diff = query[j] - x_train.at(i, j);
      d2 += diff * diff;
    }
    dist.emplace_back(d2, i);
  }
  std::sort(dist.begin(), dist.end());
  k = std::min(k, dist.size());
  double pos = 0.0;
  for (std::size_t i = 0; i < k; ++i) pos += y_train[dist[i].second];
  return pos / static_cast<double>(k);
}

ScoredLabels random_scored_labels(std::uint64_t seed, std::size_t n,
                                  bool with_ties) {
  Rng rng(seed);
  ScoredLabels data;
  data.scores.reserve(n);
  data.labels.reserve(n);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    double score = rng.uniform01();
    if (with_ties) score = std::floor(score * 8.0) / 8.0;  // heavy ties
    const int label = rng.bernoulli(0.4) ? 1 : 0;
    data.scores.push_back(score);
    data.labels.push_back(label);
    (label == 1 ? has_pos : has_neg) = true;
  }
  // Guarantee both classes.
  if (!has_pos) data.labels[0] = 1;
  if (!has_neg) data.labels[n > 1 ? 1 : 0] = 0;
  return data;
}

void separable_dataset(std::uint64_t seed, std::size_t n, Matrix& x,
                       std::vector<int>& y) {
  Rng rng(seed);
  x = Matrix(n, 2);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    // Components in (0.1, 1.1) pushed to the label's side of x0 + x1 = 0.
    const double a = 0.1 + rng.uniform01();
    const double b = 0.1 + rng.uniform01();
    x.at(i, 0) = label == 1 ? a : -a;
    x.at(i, 1) = label == 1 ? b : -b;
    y[i] = label;
  }
  bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  bool has_neg = std::find(y.begin(), y.end(), 0) != y.end();
  if (!has_pos) {
    y[0] = 1;
    x.at(0, 0) = 0.5;
    x.at(0, 1) = 0.5;
  }
  if (!has_neg) {
    y[1] = 0;
    x.at(1, 0) = -0.5;
    x.at(1, 1) = -0.5;
  }
}

PredictionSet make_predictions(std::string model_id,
                               std::vector<std::string> ids,
                               std::vector<double> scores) {
  PredictionSet p;
  p.model_id = std::move(model_id);
  p.image_ids = std::move(ids);
  p.scores = std::move(scores);
  return p;
}

LabeledCohort make_cohort(std::vector<std::string> patient_ids,
                          std::vector<std::string> image_ids,
                          std::vector<int> labels, std::string site) {
  LabeledCohort cohort;
  for (std::size_t i = 0; i < image_ids.size(); ++i)
    cohort.rows.push_back(
        {patient_ids[i], image_ids[i], labels[i], site});
  return cohort;
}

}  // namespace fuseval::testing
