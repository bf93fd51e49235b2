#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fuseval/cohort.hpp"
#include "fuseval/matrix.hpp"

namespace fuseval {

enum class ModelKind {
  Logistic,
  Knn,
  RandomForest,
  Gbdt,
  MlpHead,
};

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// Training schedule and hyperparameters. The gradient-trained kinds use
// weighted binary cross-entropy with Adam; the mlp head additionally runs
// the decaying-rate schedule lr_e = learning_rate * (1 - per_epoch_decay)^e
// with validation-loss early stopping.
struct TrainConfig {
  double learning_rate = 0.001;
  double per_epoch_decay = 0.05;
  std::size_t batch_size = 32;
  int early_stop_patience = 3;
  int max_epochs = 200;

  int logistic_max_epochs = 500;
  double logistic_tolerance = 1e-8;

  std::size_t knn_k = 5;

  std::size_t forest_trees = 100;
  int forest_max_depth = 8;

  int gbdt_rounds = 100;
  int gbdt_depth = 3;
  double gbdt_shrinkage = 0.1;

  std::size_t mlp_hidden = 32;

  // When absent, weighted kinds (logistic, mlp head) compute weights from
  // the training labels; tree and knn kinds are unweighted.
  std::optional<ClassWeights> class_weights;

  std::uint64_t seed = 0;
};

// Learning rate in effect at (0-based) epoch e.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct TrainMeta {
  int epochs_run = 0;
  double final_valid_loss = 0.0;
  // Per-round training loss for gbdt, per-epoch validation loss for the
  // mlp head; empty for the other kinds.
  std::vector<double> loss_curve;
};

namespace detail {
struct ModelImpl;
}

// A trained model. Prediction is pure and deterministic given the
// parameters; parameters are opaque to callers and round-trip through the
// JSON bundle format (save/load with a version field).
class Model {
 public:
  Model();
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  Model(const Model&);
  Model& operator=(const Model&);

  // Validation data is required for the gradient-trained kinds (logistic,
  // mlp head) and ignored by the others.
  static Model train(ModelKind kind, const Matrix& x,
                     const std::vector<int>& y, const Matrix& x_valid,
                     const std::vector<int>& y_valid, const TrainConfig& cfg);

  std::vector<double> predict(const Matrix& x) const;

  ModelKind kind() const;
  const TrainMeta& meta() const;

  std::string save_json() const;
  static Model load_json(const std::string& text);

 private:
  friend double gradient_check(const Model&, const Matrix&,
                               const std::vector<int>&);
  friend struct detail::ModelImpl;
  std::unique_ptr<detail::ModelImpl> impl_;
};

// Compares backpropagated gradients of the mlp head's loss on one batch
// against central finite differences (step 1e-5) over every parameter and
// returns the maximum relative error. Argument error for other kinds.
double gradient_check(const Model& model, const Matrix& batch_x,
                      const std::vector<int>& batch_y);

}  // namespace fuseval
