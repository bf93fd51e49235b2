#include "fuseval/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fuseval/error.hpp"
#include "fuseval/metrics.hpp"

namespace fuseval {

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::RaceEthnicity:
      return "race_ethnicity";
    case Axis::Sex:
      return "sex";
    case Axis::Age:
      return "age";
  }
  return "?";
}

Axis parse_axis_name(const std::string& name) {
  if (name == "race_ethnicity") return Axis::RaceEthnicity;
  if (name == "sex") return Axis::Sex;
  if (name == "age") return Axis::Age;
  raise(ErrorKind::Argument, "unknown demographic axis `" + name + "`");
}

namespace {

const std::vector<std::string>& axis_groups(Axis axis) {
  switch (axis) {
    case Axis::RaceEthnicity:
      return race_categories();
    case Axis::Sex:
      return sex_categories();
    case Axis::Age:
      return age_bin_labels();
  }
  raise(ErrorKind::Argument, "unknown demographic axis");
}

}  // namespace

std::string axis_group_of(Axis axis, const DemographicRecord& rec) {
  switch (axis) {
    case Axis::RaceEthnicity:
      return rec.race_ethnicity;
    case Axis::Sex:
      return rec.sex;
    case Axis::Age:
      return age_bin_labels()[static_cast<std::size_t>(age_bin(rec.age_years))];
  }
  raise(ErrorKind::Argument, "unknown demographic axis");
}

SubgroupReport subgroup_metrics(const PredictionSet& preds,
                                const LabeledCohort& labels,
                                std::span<const DemographicRecord> demographics,
                                Axis axis, std::size_t min_group_size) {
  ScoredLabels data = align(preds, labels);

  std::unordered_map<std::string_view, const DemographicRecord*> by_patient;
  by_patient.reserve(demographics.size());
  for (const auto& d : demographics) by_patient.emplace(d.patient_id, &d);

  std::unordered_map<std::string, ScoredLabels> partition;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& row = labels.rows[i];
    auto it = by_patient.find(row.patient_id);
    if (it == by_patient.end())
      raise(ErrorKind::Data,
            "no demographics for patient `" + row.patient_id + "`");
    auto& bucket = partition[axis_group_of(axis, *it->second)];
    bucket.scores.push_back(data.scores[i]);
    bucket.labels.push_back(data.labels[i]);
  }

  SubgroupReport report;
  report.axis = axis;
  for (const auto& group : axis_groups(axis)) {
    auto it = partition.find(group);
    if (it == partition.end()) continue;
    const ScoredLabels& bucket = it->second;
    const bool has_pos =
        std::find(bucket.labels.begin(), bucket.labels.end(), 1) !=
        bucket.labels.end();
    const bool has_neg =
        std::find(bucket.labels.begin(), bucket.labels.end(), 0) !=
        bucket.labels.end();
    if (!has_pos || !has_neg) {
      report.excluded.push_back({group, "single-class", bucket.size()});
      continue;
    }
    SubgroupResult result;
    result.group = group;
    result.auc = roc_auc(bucket);
    result.n_rows = bucket.size();
    result.small_sample = bucket.size() < min_group_size;
    report.groups.push_back(std::move(result));
  }
  return report;
}

AxisSummary axis_summary(const SubgroupReport& report) {
  if (report.groups.empty())
    raise(ErrorKind::UndefinedMetric,
          "axis summary undefined: no included groups");
  const double g = static_cast<double>(report.groups.size());
  double mean = 0.0;
  for (const auto& r : report.groups) mean += r.auc;
  mean /= g;
  double var = 0.0;
  for (const auto& r : report.groups) {
    const double d = r.auc - mean;
    var += d * d;
  }
  var /= g;  // population SD: with only 2-5 groups the sample divisor inflates
  return {mean, std::sqrt(var)};
}

std::vector<bool> star_flag(std::span<const double> sds) {
  if (sds.empty()) raise(ErrorKind::Argument, "star_flag needs >= 1 strategy");
  auto rounded = [](double sd) { return std::nearbyint(sd * 1000.0) / 1000.0; };
  double max_sd = rounded(sds[0]);
  for (double sd : sds) max_sd = std::max(max_sd, rounded(sd));
  std::vector<bool> flags(sds.size());
  for (std::size_t i = 0; i < sds.size(); ++i)
    flags[i] = rounded(sds[i]) == max_sd;
  return flags;
}

FairnessTable build_fairness_table(
    const std::vector<std::string>& strategies, const std::vector<Axis>& axes,
    const std::vector<std::vector<AxisSummary>>& summaries) {
  if (summaries.size() != strategies.size())
    raise(ErrorKind::Argument, "one summary row per strategy required");
  FairnessTable table;
  table.strategies = strategies;
  table.axes = axes;
  table.cells.resize(strategies.size() * axes.size());
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    if (summaries[s].size() != axes.size())
      raise(ErrorKind::Argument, "one summary per axis required");
    for (std::size_t a = 0; a < axes.size(); ++a)
      table.at(s, a) = {summaries[s][a].mean_auc, summaries[s][a].sd_auc, false};
  }
  for (std::size_t a = 0; a < axes.size(); ++a) {
    std::vector<double> column;
    column.reserve(strategies.size());
    for (std::size_t s = 0; s < strategies.size(); ++s)
      column.push_back(table.at(s, a).sd_auc);
    const auto flags = star_flag(column);
    for (std::size_t s = 0; s < strategies.size(); ++s)
      table.at(s, a).star = flags[s];
  }
  return table;
}

}  // namespace fuseval
