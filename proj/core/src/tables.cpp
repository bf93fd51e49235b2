#include "fuseval/tables.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "fuseval/error.hpp"

namespace fuseval {

using nlohmann::json;

std::string format_fixed(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double rounded = std::nearbyint(value * scale) / scale;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, rounded);
  return buf;
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  if (name == "md" || name == "markdown") return TableFormat::Markdown;
  raise(ErrorKind::Argument, "unknown table format `" + name + "`");
}

namespace {

const char* kStar = "★";

std::string interval_cell(const MetricEstimate& est) {
  return format_fixed(est.interval.point, 2) + " [" +
         format_fixed(est.interval.lo, 2) + "-" +
         format_fixed(est.interval.hi, 2) + "]";
}

std::string metric_heading(MetricId id) {
  switch (id) {
    case MetricId::Auc:
      return "AUC";
    case MetricId::Precision:
      return "Precision";
    case MetricId::Recall:
      return "Recall";
    case MetricId::F1:
      return "F1-score";
    case MetricId::Auprc:
      return "AUPRC";
    case MetricId::BalancedAccuracy:
      return "Balanced Accuracy";
  }
  return "?";
}

json estimate_to_json(const MetricEstimate& est) {
  return {{"point", est.interval.point},
          {"lo", est.interval.lo},
          {"hi", est.interval.hi},
          {"n_resamples", est.interval.n_resamples},
          {"full_sample", est.full_sample}};
}

}  // namespace

std::string metric_table_csv(const StrategyReports& reports) {
  std::string out = "strategy,metric,point,lo,hi\n";
  for (const auto& [name, report] : reports) {
    for (MetricId id : kAllMetrics) {
      const auto& est = report.of(id);
      out += name + ',' + metric_name(id) + ',' +
             format_fixed(est.interval.point, 2) + ',' +
             format_fixed(est.interval.lo, 2) + ',' +
             format_fixed(est.interval.hi, 2) + '\n';
    }
  }
  return out;
}

std::string metric_table_markdown(const StrategyReports& reports) {
  std::string out = "| Strategy |";
  for (MetricId id : kAllMetrics) out += " " + metric_heading(id) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < kAllMetrics.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& [name, report] : reports) {
    out += "| " + name + " |";
    for (MetricId id : kAllMetrics)
      out += " " + interval_cell(report.of(id)) + " |";
    out += "\n";
  }
  return out;
}

std::string metric_table_json(const StrategyReports& reports) {
  json strategies = json::array();
  for (const auto& [name, report] : reports) {
    json metrics;
    for (MetricId id : kAllMetrics)
      metrics[metric_name(id)] = estimate_to_json(report.of(id));
    strategies.push_back({{"name", name}, {"metrics", metrics}});
  }
  json j;
  j["strategies"] = strategies;
  return j.dump(2) + "\n";
}

std::string write_metric_table(const StrategyReports& reports,
                               TableFormat format) {
  switch (format) {
    case TableFormat::Csv:
      return metric_table_csv(reports);
    case TableFormat::Json:
      return metric_table_json(reports);
    case TableFormat::Markdown:
      return metric_table_markdown(reports);
  }
  raise(ErrorKind::Argument, "unknown table format");
}

namespace {

std::string axis_heading(Axis axis) {
  switch (axis) {
    case Axis::RaceEthnicity:
      return "Race-ethnicity";
    case Axis::Sex:
      return "Sex";
    case Axis::Age:
      return "Age";
  }
  return "?";
}

}  // namespace

std::string fairness_table_csv(const FairnessTable& table) {
  std::string out = "strategy,axis,mean_auc,sd_auc,star\n";
  for (std::size_t s = 0; s < table.strategies.size(); ++s) {
    for (std::size_t a = 0; a < table.axes.size(); ++a) {
      const auto& cell = table.at(s, a);
      out += table.strategies[s] + ',' + axis_name(table.axes[a]) + ',' +
             format_fixed(cell.mean_auc, 2) + ',' +
             format_fixed(cell.sd_auc, 3) + ',' + (cell.star ? "1" : "0") +
             '\n';
    }
  }
  return out;
}

std::string fairness_table_markdown(const FairnessTable& table) {
  std::string out = "| Strategy |";
  for (Axis axis : table.axes) out += " " + axis_heading(axis) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < table.axes.size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t s = 0; s < table.strategies.size(); ++s) {
    out += "| " + table.strategies[s] + " |";
    for (std::size_t a = 0; a < table.axes.size(); ++a) {
      const auto& cell = table.at(s, a);
      out += " " + format_fixed(cell.mean_auc, 2) + " [" +
             format_fixed(cell.sd_auc, 3) + "]";
      if (cell.star) out += std::string(" ") + kStar;
      out += " |";
    }
    out += "\n";
  }
  return out;
}

std::string fairness_table_json(const FairnessTable& table) {
  json rows = json::array();
  for (std::size_t s = 0; s < table.strategies.size(); ++s) {
    json axes;
    for (std::size_t a = 0; a < table.axes.size(); ++a) {
      const auto& cell = table.at(s, a);
      axes[axis_name(table.axes[a])] = {{"mean_auc", cell.mean_auc},
                                        {"sd_auc", cell.sd_auc},
                                        {"star", cell.star}};
    }
    rows.push_back({{"name", table.strategies[s]}, {"axes", axes}});
  }
  json j;
  j["strategies"] = rows;
  return j.dump(2) + "\n";
}

std::string write_fairness_table(const FairnessTable& table,
                                 TableFormat format) {
  switch (format) {
    case TableFormat::Csv:
      return fairness_table_csv(table);
    case TableFormat::Json:
      return fairness_table_json(table);
    case TableFormat::Markdown:
      return fairness_table_markdown(table);
  }
  raise(ErrorKind::Argument, "unknown table format");
}

}  // namespace fuseval
