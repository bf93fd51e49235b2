#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fuseval/fairness.hpp"
#include "fuseval/metrics.hpp"

namespace fuseval {

// Half-even rounding to `decimals` places, then fixed formatting.
std::string format_fixed(double value, int decimals);

enum class TableFormat { Csv, Json, Markdown };
TableFormat parse_table_format(const std::string& name);

using StrategyReports =
    std::vector<std::pair<std::string, MetricReport>>;

// Strategy-by-metric tables. Markdown mirrors the published layout with
// `point [lo-hi]` cells at 2 decimals; CSV uses the same rounding; JSON
// keeps full precision including the full-sample values.
std::string metric_table_csv(const StrategyReports& reports);
std::string metric_table_markdown(const StrategyReports& reports);
std::string metric_table_json(const StrategyReports& reports);
std::string write_metric_table(const StrategyReports& reports,
                               TableFormat format);

// Fairness tables: markdown cells are `mean [sd]` with a trailing star on
// the per-axis maximum SD (mean at 2 decimals, SD at 3).
std::string fairness_table_csv(const FairnessTable& table);
std::string fairness_table_markdown(const FairnessTable& table);
std::string fairness_table_json(const FairnessTable& table);
std::string write_fairness_table(const FairnessTable& table,
                                 TableFormat format);

}  // namespace fuseval
