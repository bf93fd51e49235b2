#pragma once

// Internal parameter structs shared by the learner implementations.
// Callers only ever see the Model facade.

#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "fuseval/cohort.hpp"
#include "fuseval/learners.hpp"
#include "fuseval/matrix.hpp"

namespace fuseval::detail {

struct LogisticParams {
  std::vector<double> w;
  double b = 0.0;
};

struct KnnParams {
  Matrix x;
  std::vector<int> y;
  std::size_t k = 5;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf payload
  int left = -1;
  int right = -1;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double eval(std::span<const double> row) const {
    int i = 0;
    while (!nodes[i].is_leaf())
      i = row[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold
              ? nodes[i].left
              : nodes[i].right;
    return nodes[i].value;
  }
};

struct ForestParams {
  std::vector<Tree> trees;
};

struct GbdtParams {
  double base_score = 0.0;  // log-odds of the training prevalence
  double shrinkage = 0.1;
  std::vector<Tree> trees;
};

struct MlpParams {
  std::size_t in_dim = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x in, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  // Loss weights fixed at training time; kept so the gradient check uses
  // the same objective the model was trained with.
  double w_pos = 1.0;
  double w_neg = 1.0;
};

using AnyParams =
    std::variant<LogisticParams, KnnParams, ForestParams, GbdtParams,
                 MlpParams>;

struct ModelImpl {
  ModelKind kind = ModelKind::Logistic;
  TrainMeta meta;
  AnyParams params;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically stable BCE from the logit: softplus(z) - y*z.
inline double bce_from_logit(double z, int y) {
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z))
                                : std::log1p(std::exp(z));
  return softplus - static_cast<double>(y) * z;
}

// Shared input validation: finite features, binary labels, both classes.
void validate_training_inputs(const Matrix& x, const std::vector<int>& y);

ClassWeights effective_class_weights(const std::vector<int>& y,
                                     const TrainConfig& cfg);

// Adam state over one flat parameter vector.
struct Adam {
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad,
            double lr) {
    ++t;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }

  std::vector<double> m, v;
  double t = 0;
};

LogisticParams train_logistic(const Matrix& x, const std::vector<int>& y,
                              const Matrix& x_valid,
                              const std::vector<int>& y_valid,
                              const TrainConfig& cfg, TrainMeta& meta);
std::vector<double> predict_logistic(const LogisticParams& p, const Matrix& x);

KnnParams train_knn(const Matrix& x, const std::vector<int>& y,
                    const TrainConfig& cfg, TrainMeta& meta);
std::vector<double> predict_knn(const KnnParams& p, const Matrix& x);

ForestParams train_forest(const Matrix& x, const std::vector<int>& y,
                          const TrainConfig& cfg, TrainMeta& meta);
std::vector<double> predict_forest(const ForestParams& p, const Matrix& x);

GbdtParams train_gbdt(const Matrix& x, const std::vector<int>& y,
                      const TrainConfig& cfg, TrainMeta& meta);
std::vector<double> predict_gbdt(const GbdtParams& p, const Matrix& x);

MlpParams train_mlp(const Matrix& x, const std::vector<int>& y,
                    const Matrix& x_valid, const std::vector<int>& y_valid,
                    const TrainConfig& cfg, TrainMeta& meta);
std::vector<double> predict_mlp(const MlpParams& p, const Matrix& x);
double mlp_gradient_check(const MlpParams& p, const Matrix& batch_x,
                          const std::vector<int>& batch_y);

}  // namespace fuseval::detail
