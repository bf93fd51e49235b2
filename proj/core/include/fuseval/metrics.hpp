#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fuseval/matrix.hpp"
#include "fuseval/types.hpp"

namespace fuseval {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Scores and labels in matched row order; the internal currency of this
// module. align() builds one from a PredictionSet and a LabeledCohort.
struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
};

// Pairs predictions with cohort labels by image id. Identical sequences
// zip directly; otherwise the predictions are reordered to cohort order.
// Mismatched id sets are an alignment error.
ScoredLabels align(const PredictionSet& preds, const LabeledCohort& labels);

ConfusionCounts confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       double threshold);
ConfusionCounts confusion_at_threshold(const ScoredLabels& data,
                                       double threshold);

// Threshold metrics. Each throws ErrorKind::UndefinedMetric when its
// denominator is empty.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f1_score(const ConfusionCounts& c);
double balanced_accuracy(const ConfusionCounts& c);

// Mann-Whitney AUC: fraction of (positive, negative) pairs where the
// positive scores higher, ties counted 1/2. Computed via average ranks.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
double roc_auc(const ScoredLabels& data);

// Average precision: sum over positives, in descending-score order with
// ties kept in input order, of precision-at-that-rank / n_pos.
double average_precision(std::span<const double> scores,
                         std::span<const int> labels);
double average_precision(const ScoredLabels& data);

enum class MetricId : int {
  Auc = 0,
  Precision = 1,
  Recall = 2,
  F1 = 3,
  Auprc = 4,
  BalancedAccuracy = 5,
};

constexpr std::array<MetricId, 6> kAllMetrics = {
    MetricId::Auc,      MetricId::Precision, MetricId::Recall,
    MetricId::F1,       MetricId::Auprc,     MetricId::BalancedAccuracy};

std::string metric_name(MetricId id);
MetricId parse_metric_name(const std::string& name);

double metric_value(MetricId id, const ScoredLabels& data, double threshold);

struct IntervalEstimate {
  double point = 0.0;  // mean of resample values
  double lo = 0.0;     // 2.5th percentile
  double hi = 0.0;     // 97.5th percentile
  std::size_t n_resamples = 0;
};

// Percentile bootstrap over rows resampled with replacement. Resample i
// draws from an Rng seeded with derive_seed(seed, i), so results are
// independent of evaluation order and thread count. Draws on which the
// metric is undefined (e.g. single-class) are redrawn from the same
// per-index stream, up to a bounded retry count.
IntervalEstimate bootstrap_ci(MetricId id, const ScoredLabels& data,
                              double threshold, std::size_t n_resamples,
                              std::uint64_t seed, unsigned n_threads = 1);

struct MetricEstimate {
  IntervalEstimate interval;
  double full_sample = 0.0;  // metric on the unresampled data
};

// Six metrics, each with the bootstrap interval and the full-sample value.
struct MetricReport {
  std::array<MetricEstimate, 6> metrics;

  const MetricEstimate& of(MetricId id) const {
    return metrics[static_cast<std::size_t>(id)];
  }
  MetricEstimate& of(MetricId id) {
    return metrics[static_cast<std::size_t>(id)];
  }
};

MetricReport evaluate(const ScoredLabels& data, double threshold,
                      std::size_t n_resamples, std::uint64_t seed,
                      unsigned n_threads = 1);

// Train/valid/test design matrices for a trainable pipeline.
struct SupervisedData {
  Matrix x_train;
  std::vector<int> y_train;
  Matrix x_valid;
  std::vector<int> y_valid;
  Matrix x_test;
  std::vector<int> y_test;
};

// Trains on (x_train, y_train) with (x_valid, y_valid) available for early
// stopping and returns scores for x_test.
using TrainEvalFn = std::function<std::vector<double>(
    const Matrix& x_train, const std::vector<int>& y_train,
    const Matrix& x_valid, const std::vector<int>& y_valid,
    const Matrix& x_test)>;

// Null baseline: training labels are permuted with the seeded generator,
// the pipeline is retrained, and the untouched test split is evaluated.
// With permute = false this is the normal pipeline report.
MetricReport permutation_baseline(const TrainEvalFn& pipeline,
                                  const SupervisedData& data, double threshold,
                                  std::size_t n_resamples, std::uint64_t seed,
                                  bool permute = true);

}  // namespace fuseval
