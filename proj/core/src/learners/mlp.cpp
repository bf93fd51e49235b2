#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fuseval/error.hpp"
#include "fuseval/rng.hpp"
#include "params.hpp"

namespace fuseval::detail {

namespace {

struct Gradients {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  explicit Gradients(const MlpParams& p)
      : w1(p.w1.size(), 0.0), b1(p.b1.size(), 0.0), w2(p.w2.size(), 0.0) {}

  void reset() {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    b2 = 0.0;
  }
};

double forward_logit(const MlpParams& p, std::span<const double> row,
                     std::vector<double>* hidden_out) {
  double logit = p.b2;
  for (std::size_t h = 0; h < p.hidden; ++h) {
    double pre = p.b1[h];
    const double* w = p.w1.data() + h * p.in_dim;
    for (std::size_t j = 0; j < p.in_dim; ++j) pre += w[j] * row[j];
    const double act = pre > 0.0 ? pre : 0.0;
    if (hidden_out) (*hidden_out)[h] = act;
    logit += p.w2[h] * act;
  }
  return logit;
}

// Mean weighted BCE over the batch; gradients accumulated when asked.
double batch_loss(const MlpParams& p, const Matrix& x,
                  const std::vector<int>& y,
                  const std::vector<std::size_t>& rows, Gradients* grads) {
  std::vector<double> hidden(p.hidden);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    auto row = x.row(r);
    const double z = forward_logit(p, row, &hidden);
    const int label = y[r];
    const double weight = label == 1 ? p.w_pos : p.w_neg;
    loss += weight * bce_from_logit(z, label);
    if (grads) {
      const double dz =
          weight * (sigmoid(z) - static_cast<double>(label)) * inv_n;
      grads->b2 += dz;
      for (std::size_t h = 0; h < p.hidden; ++h) {
        grads->w2[h] += dz * hidden[h];
        if (hidden[h] > 0.0) {  // ReLU gate
          const double dpre = dz * p.w2[h];
          grads->b1[h] += dpre;
          double* gw = grads->w1.data() + h * p.in_dim;
          for (std::size_t j = 0; j < p.in_dim; ++j) gw[j] += dpre * row[j];
        }
      }
    }
  }
  return loss * inv_n;
}

double full_loss(const MlpParams& p, const Matrix& x,
                 const std::vector<int>& y) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return batch_loss(p, x, y, rows, nullptr);
}

std::size_t param_count(const MlpParams& p) {
  return p.w1.size() + p.b1.size() + p.w2.size() + 1;
}

void flatten(const MlpParams& p, std::vector<double>& flat) {
  flat.clear();
  flat.insert(flat.end(), p.w1.begin(), p.w1.end());
  flat.insert(flat.end(), p.b1.begin(), p.b1.end());
  flat.insert(flat.end(), p.w2.begin(), p.w2.end());
  flat.push_back(p.b2);
}

void unflatten(const std::vector<double>& flat, MlpParams& p) {
  std::size_t off = 0;
  std::copy_n(flat.begin(), p.w1.size(), p.w1.begin());
  off += p.w1.size();
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p.b1.size(),
              p.b1.begin());
  off += p.b1.size();
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p.w2.size(),
              p.w2.begin());
  off += p.w2.size();
  p.b2 = flat[off];
}

void flatten_grads(const Gradients& g, std::vector<double>& flat) {
  flat.clear();
  flat.insert(flat.end(), g.w1.begin(), g.w1.end());
  flat.insert(flat.end(), g.b1.begin(), g.b1.end());
  flat.insert(flat.end(), g.w2.begin(), g.w2.end());
  flat.push_back(g.b2);
}

// Symmetric uniform fan-in init: weights U(-1/sqrt(fan_in), +1/sqrt(fan_in))
// drawn layer by layer, row-major, from the seeded generator; biases zero.
MlpParams init_params(std::size_t in_dim, std::size_t hidden, double w_pos,
                      double w_neg, std::uint64_t seed) {
  MlpParams p;
  p.in_dim = in_dim;
  p.hidden = hidden;
  p.w_pos = w_pos;
  p.w_neg = w_neg;
  p.w1.resize(hidden * in_dim);
  p.b1.assign(hidden, 0.0);
  p.w2.resize(hidden);
  p.b2 = 0.0;

  Rng rng(derive_seed(seed, 0));
  const double scale1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& w : p.w1) w = (2.0 * rng.uniform01() - 1.0) * scale1;
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : p.w2) w = (2.0 * rng.uniform01() - 1.0) * scale2;
  return p;
}

}  // namespace

MlpParams train_mlp(const Matrix& x, const std::vector<int>& y,
                    const Matrix& x_valid, const std::vector<int>& y_valid,
                    const TrainConfig& cfg, TrainMeta& meta) {
  const ClassWeights cw = effective_class_weights(y, cfg);
  MlpParams p = init_params(x.cols(), cfg.mlp_hidden, cw.positive, cw.negative,
                            cfg.seed);

  Adam adam(param_count(p));
  std::vector<double> flat, flat_grad;
  Gradients grads(p);

  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);

  MlpParams best = p;
  double best_valid = full_loss(p, x_valid, y_valid);
  meta.loss_curve.clear();
  int bad_epochs = 0;
  int epoch = 0;
  for (; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.learning_rate *
                      std::pow(1.0 - cfg.per_epoch_decay, epoch);
    // Mini-batch order reshuffled per epoch from its own derived stream.
    Rng epoch_rng(derive_seed(cfg.seed, 1 + static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, order.size());
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      grads.reset();
      batch_loss(p, x, y, batch, &grads);
      flatten(p, flat);
      flatten_grads(grads, flat_grad);
      adam.step(flat, flat_grad, lr);
      unflatten(flat, p);
    }

    const double valid_loss = full_loss(p, x_valid, y_valid);
    meta.loss_curve.push_back(valid_loss);
    if (valid_loss < best_valid - 1e-12) {
      best_valid = valid_loss;
      best = p;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.early_stop_patience) {
        ++epoch;
        break;
      }
    }
  }

  meta.epochs_run = epoch;
  meta.final_valid_loss = best_valid;
  return best;
}

std::vector<double> predict_mlp(const MlpParams& p, const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out.push_back(sigmoid(forward_logit(p, x.row(i), nullptr)));
  return out;
}

double mlp_gradient_check(const MlpParams& params, const Matrix& batch_x,
                          const std::vector<int>& batch_y) {
  std::vector<std::size_t> rows(batch_x.rows());
  std::iota(rows.begin(), rows.end(), 0);

  MlpParams p = params;
  Gradients grads(p);
  batch_loss(p, batch_x, batch_y, rows, &grads);

  std::vector<double> analytic;
  flatten_grads(grads, analytic);
  std::vector<double> flat;
  flatten(p, flat);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + h;
    unflatten(flat, p);
    const double plus = batch_loss(p, batch_x, batch_y, rows, nullptr);
    flat[i] = saved - h;
    unflatten(flat, p);
    const double minus = batch_loss(p, batch_x, batch_y, rows, nullptr);
    flat[i] = saved;

    const double fd = (plus - minus) / (2.0 * h);
    const double rel = std::abs(fd - analytic[i]) /
                       (std::abs(fd) + std::abs(analytic[i]) + 1e-10);
    max_rel = std::max(max_rel, rel);
  }
  unflatten(flat, p);
  return max_rel;
}

}  // namespace fuseval::detail
