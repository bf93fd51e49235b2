#include "fuseval/error.hpp"
#include "params.hpp"

namespace fuseval::detail {

namespace {

// Mean weighted BCE and its gradient over the full batch.
double logistic_loss_grad(const LogisticParams& p, const Matrix& x,
                          const std::vector<int>& y, double w_pos,
                          double w_neg, std::vector<double>* grad_w,
                          double* grad_b) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (grad_w) std::fill(grad_w->begin(), grad_w->end(), 0.0);
  if (grad_b) *grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    double z = p.b;
    for (std::size_t j = 0; j < d; ++j) z += p.w[j] * row[j];
    const double weight = y[i] == 1 ? w_pos : w_neg;
    loss += weight * bce_from_logit(z, y[i]);
    if (grad_w) {
      const double dz = weight * (sigmoid(z) - static_cast<double>(y[i])) /
                        static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) (*grad_w)[j] += dz * row[j];
      *grad_b += dz;
    }
  }
  return loss / static_cast<double>(n);
}

}  // namespace

LogisticParams train_logistic(const Matrix& x, const std::vector<int>& y,
                              const Matrix& x_valid,
                              const std::vector<int>& y_valid,
                              const TrainConfig& cfg, TrainMeta& meta) {
  const ClassWeights cw = effective_class_weights(y, cfg);
  LogisticParams p;
  p.w.assign(x.cols(), 0.0);
  p.b = 0.0;

  Adam adam(x.cols() + 1);
  std::vector<double> grad_w(x.cols(), 0.0);
  std::vector<double> flat(x.cols() + 1, 0.0);
  std::vector<double> flat_grad(x.cols() + 1, 0.0);

  double prev_loss = std::numeric_limits<double>::infinity();
  int epoch = 0;
  for (; epoch < cfg.logistic_max_epochs; ++epoch) {
    double grad_b = 0.0;
    const double loss = logistic_loss_grad(p, x, y, cw.positive, cw.negative,
                                           &grad_w, &grad_b);
    if (std::abs(prev_loss - loss) < cfg.logistic_tolerance) break;
    prev_loss = loss;

    std::copy(p.w.begin(), p.w.end(), flat.begin());
    flat.back() = p.b;
    std::copy(grad_w.begin(), grad_w.end(), flat_grad.begin());
    flat_grad.back() = grad_b;
    adam.step(flat, flat_grad, cfg.learning_rate);
    std::copy(flat.begin(), flat.end() - 1, p.w.begin());
    p.b = flat.back();
  }

  meta.epochs_run = epoch;
  meta.final_valid_loss = logistic_loss_grad(p, x_valid, y_valid, cw.positive,
                                             cw.negative, nullptr, nullptr);
  return p;
}

std::vector<double> predict_logistic(const LogisticParams& p,
                                     const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    double z = p.b;
    for (std::size_t j = 0; j < row.size(); ++j) z += p.w[j] * row[j];
    out.push_back(sigmoid(z));
  }
  return out;
}

}  // namespace fuseval::detail
