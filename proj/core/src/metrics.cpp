#include "fuseval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "fuseval/error.hpp"
#include "fuseval/rng.hpp"

namespace fuseval {

ScoredLabels align(const PredictionSet& preds, const LabeledCohort& labels) {
  ScoredLabels out;
  out.scores.reserve(labels.size());
  out.labels.reserve(labels.size());

  if (preds.size() == labels.size()) {
    bool same_order = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (preds.image_ids[i] != labels.rows[i].image_id) {
        same_order = false;
        break;
      }
    }
    if (same_order) {
      out.scores = preds.scores;
      for (const auto& row : labels.rows) out.labels.push_back(row.label);
      return out;
    }
  }

  std::unordered_map<std::string_view, double> by_id;
  by_id.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    by_id.emplace(preds.image_ids[i], preds.scores[i]);
  if (by_id.size() != labels.size())
    raise(ErrorKind::Alignment,
          "predictions cover " + std::to_string(by_id.size()) +
              " images, labels cover " + std::to_string(labels.size()));
  for (const auto& row : labels.rows) {
    auto it = by_id.find(row.image_id);
    if (it == by_id.end())
      raise(ErrorKind::Alignment,
            "no prediction for image `" + row.image_id + "`");
    out.scores.push_back(it->second);
    out.labels.push_back(row.label);
  }
  return out;
}

ConfusionCounts confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       double threshold) {
  if (scores.size() != labels.size())
    raise(ErrorKind::Alignment, "scores and labels differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = labels[i] == 1;
    if (pred && pos)
      ++c.tp;
    else if (pred && !pos)
      ++c.fp;
    else if (!pred && pos)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

ConfusionCounts confusion_at_threshold(const ScoredLabels& data,
                                       double threshold) {
  return confusion_at_threshold(data.scores, data.labels, threshold);
}

double precision(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0)
    raise(ErrorKind::UndefinedMetric, "precision undefined: no predicted positives");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0)
    raise(ErrorKind::UndefinedMetric, "recall undefined: no positive labels");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1_score(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double balanced_accuracy(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
    raise(ErrorKind::UndefinedMetric,
          "balanced accuracy undefined: a class is empty");
  const double tpr =
      static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double tnr =
      static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return (tpr + tnr) / 2.0;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    raise(ErrorKind::Alignment, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    raise(ErrorKind::UndefinedMetric, "AUC undefined: single-class labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average 1-based ranks within tie groups; rank-sum of positives gives
  // the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double roc_auc(const ScoredLabels& data) {
  return roc_auc(data.scores, data.labels);
}

double average_precision(std::span<const double> scores,
                         std::span<const int> labels) {
  if (scores.size() != labels.size())
    raise(ErrorKind::Alignment, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
  if (n_pos == 0 || n_pos == n)
    raise(ErrorKind::UndefinedMetric, "AUPRC undefined: single-class labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Descending score, ties in input order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    if (labels[order[rank - 1]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(n_pos);
}

double average_precision(const ScoredLabels& data) {
  return average_precision(data.scores, data.labels);
}

std::string metric_name(MetricId id) {
  switch (id) {
    case MetricId::Auc:
      return "auc";
    case MetricId::Precision:
      return "precision";
    case MetricId::Recall:
      return "recall";
    case MetricId::F1:
      return "f1";
    case MetricId::Auprc:
      return "auprc";
    case MetricId::BalancedAccuracy:
      return "balanced_accuracy";
  }
  return "?";
}

MetricId parse_metric_name(const std::string& name) {
  for (MetricId id : kAllMetrics)
    if (metric_name(id) == name) return id;
  raise(ErrorKind::Argument, "unknown metric `" + name + "`");
}

double metric_value(MetricId id, const ScoredLabels& data, double threshold) {
  switch (id) {
    case MetricId::Auc:
      return roc_auc(data);
    case MetricId::Auprc:
      return average_precision(data);
    case MetricId::Precision:
      return precision(confusion_at_threshold(data, threshold));
    case MetricId::Recall:
      return recall(confusion_at_threshold(data, threshold));
    case MetricId::F1:
      return f1_score(confusion_at_threshold(data, threshold));
    case MetricId::BalancedAccuracy:
      return balanced_accuracy(confusion_at_threshold(data, threshold));
  }
  raise(ErrorKind::Argument, "unknown metric id");
}

namespace {

constexpr int kMaxRedraws = 100;

// One bootstrap value: resample rows with replacement from the per-index
// stream, redrawing (bounded) while the metric is undefined on the draw.
double bootstrap_value(MetricId id, const ScoredLabels& data, double threshold,
                       std::uint64_t master_seed, std::size_t index) {
  const std::size_t n = data.size();
  Rng rng(derive_seed(master_seed, index));
  ScoredLabels sample;
  sample.scores.resize(n);
  sample.labels.resize(n);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = static_cast<std::size_t>(rng.below(n));
      sample.scores[k] = data.scores[j];
      sample.labels[k] = data.labels[j];
    }
    try {
      return metric_value(id, sample, threshold);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedMetric) throw;
    }
  }
  raise(ErrorKind::Data, "degenerate data: metric `" + metric_name(id) +
                             "` undefined on " + std::to_string(kMaxRedraws) +
                             " consecutive bootstrap draws");
}

// Linear-interpolation percentile on a sorted vector (the numpy default):
// rank = q * (m - 1), interpolate between the bracketing order statistics.
double percentile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double pos = q * static_cast<double>(m - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= m) return sorted[m - 1];
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

IntervalEstimate bootstrap_ci(MetricId id, const ScoredLabels& data,
                              double threshold, std::size_t n_resamples,
                              std::uint64_t seed, unsigned n_threads) {
  if (n_resamples < 1)
    raise(ErrorKind::Argument, "bootstrap needs n_resamples >= 1");
  if (data.size() == 0)
    raise(ErrorKind::Argument, "bootstrap needs a non-empty sample");
  // Fail fast if the metric is undefined on the full data.
  (void)metric_value(id, data, threshold);

  std::vector<double> values(n_resamples);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_resamples; ++i)
      values[i] = bootstrap_value(id, data, threshold, seed, i);
  } else {
    const unsigned workers =
        std::min<unsigned>(n_threads, static_cast<unsigned>(n_resamples));
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (std::size_t i = w; i < n_resamples; i += workers)
            values[i] = bootstrap_value(id, data, threshold, seed, i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  IntervalEstimate est;
  est.n_resamples = n_resamples;
  est.point = std::accumulate(values.begin(), values.end(), 0.0) /
              static_cast<double>(n_resamples);
  std::sort(values.begin(), values.end());
  est.lo = percentile_sorted(values, 0.025);
  est.hi = percentile_sorted(values, 0.975);
  return est;
}

MetricReport evaluate(const ScoredLabels& data, double threshold,
                      std::size_t n_resamples, std::uint64_t seed,
                      unsigned n_threads) {
  MetricReport report;
  for (MetricId id : kAllMetrics) {
    MetricEstimate& entry = report.of(id);
    entry.full_sample = metric_value(id, data, threshold);
    entry.interval =
        bootstrap_ci(id, data, threshold, n_resamples, seed, n_threads);
  }
  return report;
}

MetricReport permutation_baseline(const TrainEvalFn& pipeline,
                                  const SupervisedData& data, double threshold,
                                  std::size_t n_resamples, std::uint64_t seed,
                                  bool permute) {
  std::vector<int> y_train = data.y_train;
  if (permute) {
    Rng rng(derive_seed(seed, 0));
    rng.shuffle(y_train);
  }
  std::vector<double> scores =
      pipeline(data.x_train, y_train, data.x_valid, data.y_valid, data.x_test);
  if (scores.size() != data.y_test.size())
    raise(ErrorKind::Computation,
          "pipeline returned " + std::to_string(scores.size()) +
              " scores for " + std::to_string(data.y_test.size()) +
              " test rows");
  ScoredLabels eval_data{std::move(scores), data.y_test};
  return evaluate(eval_data, threshold, n_resamples, derive_seed(seed, 1));
}

}  // namespace fuseval
