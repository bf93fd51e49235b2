#include "fuseval/learners.hpp"

#include <cmath>

#include <json.hpp>

#include "fuseval/error.hpp"
#include "params.hpp"

namespace fuseval {

using nlohmann::json;

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic:
      return "logistic";
    case ModelKind::Knn:
      return "knn";
    case ModelKind::RandomForest:
      return "random_forest";
    case ModelKind::Gbdt:
      return "gbdt";
    case ModelKind::MlpHead:
      return "mlp_head";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logistic") return ModelKind::Logistic;
  if (name == "knn") return ModelKind::Knn;
  if (name == "random_forest" || name == "forest") return ModelKind::RandomForest;
  if (name == "gbdt") return ModelKind::Gbdt;
  if (name == "mlp_head" || name == "mlp") return ModelKind::MlpHead;
  raise(ErrorKind::Argument, "unknown model kind `" + name + "`");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(1.0 - cfg.per_epoch_decay, epoch);
}

namespace detail {

void validate_training_inputs(const Matrix& x, const std::vector<int>& y) {
  if (x.rows() != y.size())
    raise(ErrorKind::Argument, "feature matrix rows do not match label count");
  if (x.rows() == 0) raise(ErrorKind::Argument, "empty training set");
  for (double v : x.data())
    if (!std::isfinite(v))
      raise(ErrorKind::Data, "non-finite value in feature matrix");
  bool saw_pos = false, saw_neg = false;
  for (int label : y) {
    if (label != 0 && label != 1)
      raise(ErrorKind::Data, "labels must be binary 0/1");
    (label == 1 ? saw_pos : saw_neg) = true;
  }
  if (!saw_pos || !saw_neg)
    raise(ErrorKind::Training, "cannot train on single-class labels");
}

ClassWeights effective_class_weights(const std::vector<int>& y,
                                     const TrainConfig& cfg) {
  if (cfg.class_weights) return *cfg.class_weights;
  return class_weights_from_labels(y);
}

}  // namespace detail

Model::Model() : impl_(std::make_unique<detail::ModelImpl>()) {}
Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::Model(const Model& other)
    : impl_(std::make_unique<detail::ModelImpl>(*other.impl_)) {}
Model& Model::operator=(const Model& other) {
  impl_ = std::make_unique<detail::ModelImpl>(*other.impl_);
  return *this;
}

Model Model::train(ModelKind kind, const Matrix& x, const std::vector<int>& y,
                   const Matrix& x_valid, const std::vector<int>& y_valid,
                   const TrainConfig& cfg) {
  detail::validate_training_inputs(x, y);
  const bool gradient_kind =
      kind == ModelKind::Logistic || kind == ModelKind::MlpHead;
  if (gradient_kind) {
    if (x_valid.rows() == 0)
      raise(ErrorKind::Training, "gradient-trained kinds need a validation set");
    if (x_valid.rows() != y_valid.size())
      raise(ErrorKind::Argument, "validation rows do not match label count");
    if (x_valid.cols() != x.cols())
      raise(ErrorKind::Argument, "validation feature width differs from training");
    for (double v : x_valid.data())
      if (!std::isfinite(v))
        raise(ErrorKind::Data, "non-finite value in validation matrix");
  }

  Model model;
  model.impl_->kind = kind;
  switch (kind) {
    case ModelKind::Logistic:
      model.impl_->params =
          detail::train_logistic(x, y, x_valid, y_valid, cfg, model.impl_->meta);
      break;
    case ModelKind::Knn:
      model.impl_->params = detail::train_knn(x, y, cfg, model.impl_->meta);
      break;
    case ModelKind::RandomForest:
      model.impl_->params = detail::train_forest(x, y, cfg, model.impl_->meta);
      break;
    case ModelKind::Gbdt:
      model.impl_->params = detail::train_gbdt(x, y, cfg, model.impl_->meta);
      break;
    case ModelKind::MlpHead:
      model.impl_->params =
          detail::train_mlp(x, y, x_valid, y_valid, cfg, model.impl_->meta);
      break;
  }
  return model;
}

namespace {

std::size_t expected_width(const detail::AnyParams& params) {
  if (const auto* p = std::get_if<detail::LogisticParams>(&params))
    return p->w.size();
  if (const auto* p = std::get_if<detail::KnnParams>(&params))
    return p->x.cols();
  if (const auto* p = std::get_if<detail::MlpParams>(&params)) return p->in_dim;
  return 0;  // tree kinds evaluate whatever width they were built on
}

}  // namespace

std::vector<double> Model::predict(const Matrix& x) const {
  const std::size_t want = expected_width(impl_->params);
  if (want != 0 && x.cols() != want)
    raise(ErrorKind::Argument, "feature width " + std::to_string(x.cols()) +
                                   " does not match training width " +
                                   std::to_string(want));
  switch (impl_->kind) {
    case ModelKind::Logistic:
      return detail::predict_logistic(
          std::get<detail::LogisticParams>(impl_->params), x);
    case ModelKind::Knn:
      return detail::predict_knn(std::get<detail::KnnParams>(impl_->params), x);
    case ModelKind::RandomForest:
      return detail::predict_forest(
          std::get<detail::ForestParams>(impl_->params), x);
    case ModelKind::Gbdt:
      return detail::predict_gbdt(std::get<detail::GbdtParams>(impl_->params),
                                  x);
    case ModelKind::MlpHead:
      return detail::predict_mlp(std::get<detail::MlpParams>(impl_->params), x);
  }
  raise(ErrorKind::Argument, "unknown model kind");
}

ModelKind Model::kind() const { return impl_->kind; }
const TrainMeta& Model::meta() const { return impl_->meta; }

namespace {

json tree_to_json(const detail::Tree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({n.feature, n.threshold, n.value, n.left, n.right});
  return nodes;
}

detail::Tree tree_from_json(const json& j) {
  detail::Tree tree;
  for (const auto& n : j) {
    detail::TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.value = n.at(2).get<double>();
    node.left = n.at(3).get<int>();
    node.right = n.at(4).get<int>();
    tree.nodes.push_back(node);
  }
  return tree;
}

}  // namespace

std::string Model::save_json() const {
  json j;
  j["format_version"] = 1;
  j["kind"] = model_kind_name(impl_->kind);
  j["meta"] = {{"epochs_run", impl_->meta.epochs_run},
               {"final_valid_loss", impl_->meta.final_valid_loss},
               {"loss_curve", impl_->meta.loss_curve}};
  json p;
  switch (impl_->kind) {
    case ModelKind::Logistic: {
      const auto& lp = std::get<detail::LogisticParams>(impl_->params);
      p = {{"w", lp.w}, {"b", lp.b}};
      break;
    }
    case ModelKind::Knn: {
      const auto& kp = std::get<detail::KnnParams>(impl_->params);
      p = {{"k", kp.k},
           {"rows", kp.x.rows()},
           {"cols", kp.x.cols()},
           {"x", kp.x.data()},
           {"y", kp.y}};
      break;
    }
    case ModelKind::RandomForest: {
      const auto& fp = std::get<detail::ForestParams>(impl_->params);
      json trees = json::array();
      for (const auto& t : fp.trees) trees.push_back(tree_to_json(t));
      p = {{"trees", trees}};
      break;
    }
    case ModelKind::Gbdt: {
      const auto& gp = std::get<detail::GbdtParams>(impl_->params);
      json trees = json::array();
      for (const auto& t : gp.trees) trees.push_back(tree_to_json(t));
      p = {{"base_score", gp.base_score},
           {"shrinkage", gp.shrinkage},
           {"trees", trees}};
      break;
    }
    case ModelKind::MlpHead: {
      const auto& mp = std::get<detail::MlpParams>(impl_->params);
      p = {{"in_dim", mp.in_dim}, {"hidden", mp.hidden}, {"w1", mp.w1},
           {"b1", mp.b1},         {"w2", mp.w2},         {"b2", mp.b2},
           {"w_pos", mp.w_pos},   {"w_neg", mp.w_neg}};
      break;
    }
  }
  j["params"] = p;
  return j.dump();
}

Model Model::load_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorKind::Format, std::string("model bundle: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      raise(ErrorKind::Format, "unsupported model bundle version");
    Model model;
    model.impl_->kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto& meta = j.at("meta");
    model.impl_->meta.epochs_run = meta.at("epochs_run").get<int>();
    model.impl_->meta.final_valid_loss =
        meta.at("final_valid_loss").get<double>();
    model.impl_->meta.loss_curve =
        meta.at("loss_curve").get<std::vector<double>>();
    const auto& p = j.at("params");
    switch (model.impl_->kind) {
      case ModelKind::Logistic: {
        detail::LogisticParams lp;
        lp.w = p.at("w").get<std::vector<double>>();
        lp.b = p.at("b").get<double>();
        model.impl_->params = std::move(lp);
        break;
      }
      case ModelKind::Knn: {
        detail::KnnParams kp;
        const auto rows = p.at("rows").get<std::size_t>();
        const auto cols = p.at("cols").get<std::size_t>();
        const auto data = p.at("x").get<std::vector<double>>();
        if (data.size() != rows * cols)
          raise(ErrorKind::Format, "model bundle: knn matrix size mismatch");
        kp.x = Matrix(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t c = 0; c < cols; ++c)
            kp.x.at(i, c) = data[i * cols + c];
        kp.y = p.at("y").get<std::vector<int>>();
        kp.k = p.at("k").get<std::size_t>();
        model.impl_->params = std::move(kp);
        break;
      }
      case ModelKind::RandomForest: {
        detail::ForestParams fp;
        for (const auto& t : p.at("trees")) fp.trees.push_back(tree_from_json(t));
        model.impl_->params = std::move(fp);
        break;
      }
      case ModelKind::Gbdt: {
        detail::GbdtParams gp;
        gp.base_score = p.at("base_score").get<double>();
        gp.shrinkage = p.at("shrinkage").get<double>();
        for (const auto& t : p.at("trees")) gp.trees.push_back(tree_from_json(t));
        model.impl_->params = std::move(gp);
        break;
      }
      case ModelKind::MlpHead: {
        detail::MlpParams mp;
        mp.in_dim = p.at("in_dim").get<std::size_t>();
        mp.hidden = p.at("hidden").get<std::size_t>();
        mp.w1 = p.at("w1").get<std::vector<double>>();
        mp.b1 = p.at("b1").get<std::vector<double>>();
        mp.w2 = p.at("w2").get<std::vector<double>>();
        mp.b2 = p.at("b2").get<double>();
        mp.w_pos = p.at("w_pos").get<double>();
        mp.w_neg = p.at("w_neg").get<double>();
        if (mp.w1.size() != mp.in_dim * mp.hidden ||
            mp.b1.size() != mp.hidden || mp.w2.size() != mp.hidden)
          raise(ErrorKind::Format, "model bundle: mlp shape mismatch");
        model.impl_->params = std::move(mp);
        break;
      }
    }
    return model;
  } catch (const json::exception& e) {
    raise(ErrorKind::Format, std::string("model bundle: ") + e.what());
  }
}

double gradient_check(const Model& model, const Matrix& batch_x,
                      const std::vector<int>& batch_y) {
  if (model.kind() != ModelKind::MlpHead)
    raise(ErrorKind::Argument,
          "gradient check only applies to the differentiable mlp head");
  if (batch_x.rows() == 0 || batch_x.rows() != batch_y.size())
    raise(ErrorKind::Argument, "gradient check needs a non-empty batch");
  return detail::mlp_gradient_check(
      std::get<detail::MlpParams>(model.impl_->params), batch_x, batch_y);
}

}  // namespace fuseval
