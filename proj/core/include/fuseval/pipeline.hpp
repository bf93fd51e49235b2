#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fuseval/cohort.hpp"
#include "fuseval/fairness.hpp"
#include "fuseval/learners.hpp"
#include "fuseval/metrics.hpp"
#include "fuseval/tables.hpp"

namespace fuseval {

// Table row keys: base:<id>, bag:unweighted, bag:weighted,
// stack:{logistic,knn,forest,gbdt}, data:multisite, data:multimodal,
// permutation.
struct Strategy {
  enum class Kind {
    Base,
    BagUnweighted,
    BagWeighted,
    Stack,
    Multisite,
    Multimodal,
    Permutation,
  };
  Kind kind = Kind::Base;
  std::string base_id;                         // Kind::Base
  ModelKind stack_kind = ModelKind::Logistic;  // Kind::Stack

  std::string name() const;
};

Strategy parse_strategy(const std::string& name);

struct PipelineConfig {
  // [data]
  std::string diagnoses_path;
  std::string demographics_path;
  std::string features_path;  // optional unless multimodal/multisite run
  std::string label_map_path;  // optional, default map when empty
  std::vector<std::pair<std::string, std::string>> prediction_paths;

  // [data_b] optional second site for data:multisite
  std::string diagnoses_b_path;
  std::string demographics_b_path;
  std::string features_b_path;

  // [split]
  SplitRatios ratios;
  std::optional<std::uint64_t> split_seed;  // default derived from master

  // [eval]
  double threshold = 0.5;
  std::size_t bootstrap = 1000;

  // [train] overrides applied to every trained model
  TrainConfig train;

  // [fusion]
  std::vector<Strategy> strategies;
  ModelKind permutation_kind = ModelKind::Logistic;

  // [fairness]
  std::vector<Axis> axes = {Axis::RaceEthnicity, Axis::Sex, Axis::Age};
  std::size_t min_group_size = 10;

  // [run]
  std::uint64_t master_seed = 0;
  std::string out_dir;

  std::uint64_t config_hash = 0;

  // Parses the config file; relative paths resolve against the file's
  // directory. The FUSEVAL_SEED environment variable, when set, overrides
  // the master seed (and only it).
  static PipelineConfig from_file(const std::string& path);
  static PipelineConfig from_text(const std::string& text,
                                  const std::string& base_dir);
};

struct StrategyRow {
  std::string name;
  MetricReport report;
  PredictionSet test_predictions;  // empty for the permutation row
  bool in_fairness = true;
};

struct ReportBundle {
  std::vector<StrategyRow> rows;  // base models first, then requested order
  FairnessTable fairness;
  std::string run_meta_json;
  Warnings warnings;

  const StrategyRow& row(const std::string& name) const;
};

// Executes label -> exclude -> split -> fusion strategies -> bootstrap
// evaluation -> fairness, and writes metrics.{csv,json,md},
// fairness.{csv,json,md}, per-strategy prediction CSVs, dendrogram.json
// (when weighted bagging runs) and run_meta.json into out_dir. With an
// empty out_dir nothing is written.
ReportBundle run_pipeline(const PipelineConfig& cfg);

}  // namespace fuseval
