#pragma once

#include <span>
#include <string>
#include <vector>

#include "fuseval/types.hpp"

namespace fuseval {

enum class Axis {
  RaceEthnicity,
  Sex,
  Age,
};

std::string axis_name(Axis axis);
Axis parse_axis_name(const std::string& name);

// The group a record falls into along an axis (race category, sex, or age
// bin label).
std::string axis_group_of(Axis axis, const DemographicRecord& record);

struct SubgroupResult {
  std::string group;
  double auc = 0.0;
  std::size_t n_rows = 0;
  bool small_sample = false;
};

struct ExcludedGroup {
  std::string group;
  std::string reason;
  std::size_t n_rows = 0;
};

struct SubgroupReport {
  Axis axis = Axis::RaceEthnicity;
  std::vector<SubgroupResult> groups;    // canonical group order
  std::vector<ExcludedGroup> excluded;   // e.g. single-class groups
};

// Per-group AUC along one demographic axis. Groups whose labels are
// single-class are excluded with a recorded reason; groups below
// min_group_size rows are kept but flagged.
SubgroupReport subgroup_metrics(const PredictionSet& preds,
                                const LabeledCohort& labels,
                                std::span<const DemographicRecord> demographics,
                                Axis axis, std::size_t min_group_size = 10);

struct AxisSummary {
  double mean_auc = 0.0;
  double sd_auc = 0.0;  // population SD (divide by group count)
};

AxisSummary axis_summary(const SubgroupReport& report);

// Stars every strategy whose SD equals the column maximum at reporting
// precision (3 decimals); ties all starred.
std::vector<bool> star_flag(std::span<const double> sds);

struct FairnessCell {
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  bool star = false;
};

// Strategies x axes, Table-5 shape. Cells are strategy-major.
struct FairnessTable {
  std::vector<std::string> strategies;
  std::vector<Axis> axes;
  std::vector<FairnessCell> cells;

  const FairnessCell& at(std::size_t strategy, std::size_t axis) const {
    return cells[strategy * axes.size() + axis];
  }
  FairnessCell& at(std::size_t strategy, std::size_t axis) {
    return cells[strategy * axes.size() + axis];
  }
};

// Assembles the table from per-strategy axis summaries and applies
// star_flag down each axis column.
FairnessTable build_fairness_table(
    const std::vector<std::string>& strategies, const std::vector<Axis>& axes,
    const std::vector<std::vector<AxisSummary>>& summaries);

}  // namespace fuseval
