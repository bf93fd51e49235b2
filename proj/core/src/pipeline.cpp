#include "fuseval/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "fuseval/config.hpp"
#include "fuseval/csv.hpp"
#include "fuseval/error.hpp"
#include "fuseval/fusion.hpp"
#include "fuseval/rng.hpp"
#include "fuseval/synth.hpp"

namespace fuseval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams derived from the master seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kPermutationStream = 4;

std::string stack_kind_key(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic:
      return "logistic";
    case ModelKind::Knn:
      return "knn";
    case ModelKind::RandomForest:
      return "forest";
    case ModelKind::Gbdt:
      return "gbdt";
    case ModelKind::MlpHead:
      return "mlp";
  }
  return "?";
}

}  // namespace

std::string Strategy::name() const {
  switch (kind) {
    case Kind::Base:
      return "base:" + base_id;
    case Kind::BagUnweighted:
      return "bag:unweighted";
    case Kind::BagWeighted:
      return "bag:weighted";
    case Kind::Stack:
      return "stack:" + stack_kind_key(stack_kind);
    case Kind::Multisite:
      return "data:multisite";
    case Kind::Multimodal:
      return "data:multimodal";
    case Kind::Permutation:
      return "permutation";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  Strategy s;
  if (name.rfind("base:", 0) == 0) {
    s.kind = Strategy::Kind::Base;
    s.base_id = name.substr(5);
    if (s.base_id.empty())
      raise(ErrorKind::Usage, "strategy `base:` needs a model id");
    return s;
  }
  if (name == "bag:unweighted") {
    s.kind = Strategy::Kind::BagUnweighted;
    return s;
  }
  if (name == "bag:weighted") {
    s.kind = Strategy::Kind::BagWeighted;
    return s;
  }
  if (name.rfind("stack:", 0) == 0) {
    s.kind = Strategy::Kind::Stack;
    const std::string kind = name.substr(6);
    if (kind == "logistic")
      s.stack_kind = ModelKind::Logistic;
    else if (kind == "knn")
      s.stack_kind = ModelKind::Knn;
    else if (kind == "forest")
      s.stack_kind = ModelKind::RandomForest;
    else if (kind == "gbdt")
      s.stack_kind = ModelKind::Gbdt;
    else
      raise(ErrorKind::Usage, "unknown stacking meta-model `" + kind +
                                  "` (want logistic|knn|forest|gbdt)");
    return s;
  }
  if (name == "data:multisite") {
    s.kind = Strategy::Kind::Multisite;
    return s;
  }
  if (name == "data:multimodal") {
    s.kind = Strategy::Kind::Multimodal;
    return s;
  }
  if (name == "permutation") {
    s.kind = Strategy::Kind::Permutation;
    return s;
  }
  raise(ErrorKind::Usage, "unknown strategy `" + name + "`");
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

}  // namespace

PipelineConfig PipelineConfig::from_text(const std::string& text,
                                         const std::string& base_dir) {
  const ConfigFile file = ConfigFile::parse(text);
  PipelineConfig cfg;
  cfg.config_hash = file.hash();

  cfg.diagnoses_path = resolve(base_dir, file.get_or("data", "diagnoses", ""));
  cfg.demographics_path =
      resolve(base_dir, file.get_or("data", "demographics", ""));
  cfg.features_path = resolve(base_dir, file.get_or("data", "features", ""));
  cfg.label_map_path = resolve(base_dir, file.get_or("data", "label_map", ""));
  if (auto preds = file.get("data", "predictions")) {
    for (const auto& item : split_list(*preds)) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        raise(ErrorKind::Data,
              "config [data] predictions: want `id=path, ...`");
      cfg.prediction_paths.emplace_back(item.substr(0, eq),
                                        resolve(base_dir, item.substr(eq + 1)));
    }
  }

  cfg.diagnoses_b_path =
      resolve(base_dir, file.get_or("data_b", "diagnoses", ""));
  cfg.demographics_b_path =
      resolve(base_dir, file.get_or("data_b", "demographics", ""));
  cfg.features_b_path =
      resolve(base_dir, file.get_or("data_b", "features", ""));

  if (auto ratios = file.get("split", "ratios")) {
    auto parts = split_list(*ratios);
    if (parts.size() != 3)
      raise(ErrorKind::Data, "config [split] ratios: want three numbers");
    try {
      cfg.ratios.train = std::stod(parts[0]);
      cfg.ratios.valid = std::stod(parts[1]);
      cfg.ratios.test = std::stod(parts[2]);
    } catch (const std::exception&) {
      raise(ErrorKind::Data, "config [split] ratios: bad number");
    }
  }
  if (auto seed = file.get("split", "seed"))
    cfg.split_seed = static_cast<std::uint64_t>(std::stoll(*seed));

  cfg.threshold = file.get_real("eval", "threshold", cfg.threshold);
  cfg.bootstrap = static_cast<std::size_t>(
      file.get_int("eval", "bootstrap", static_cast<long>(cfg.bootstrap)));

  cfg.train.learning_rate =
      file.get_real("train", "learning_rate", cfg.train.learning_rate);
  cfg.train.per_epoch_decay =
      file.get_real("train", "per_epoch_decay", cfg.train.per_epoch_decay);
  cfg.train.batch_size = static_cast<std::size_t>(file.get_int(
      "train", "batch_size", static_cast<long>(cfg.train.batch_size)));
  cfg.train.early_stop_patience = static_cast<int>(
      file.get_int("train", "patience", cfg.train.early_stop_patience));
  cfg.train.max_epochs =
      static_cast<int>(file.get_int("train", "max_epochs", cfg.train.max_epochs));
  cfg.train.knn_k = static_cast<std::size_t>(
      file.get_int("train", "knn_k", static_cast<long>(cfg.train.knn_k)));
  cfg.train.forest_trees = static_cast<std::size_t>(file.get_int(
      "train", "forest_trees", static_cast<long>(cfg.train.forest_trees)));
  cfg.train.forest_max_depth = static_cast<int>(
      file.get_int("train", "forest_depth", cfg.train.forest_max_depth));
  cfg.train.gbdt_rounds =
      static_cast<int>(file.get_int("train", "gbdt_rounds", cfg.train.gbdt_rounds));
  cfg.train.gbdt_depth =
      static_cast<int>(file.get_int("train", "gbdt_depth", cfg.train.gbdt_depth));
  cfg.train.gbdt_shrinkage =
      file.get_real("train", "gbdt_shrinkage", cfg.train.gbdt_shrinkage);
  cfg.train.mlp_hidden = static_cast<std::size_t>(file.get_int(
      "train", "hidden", static_cast<long>(cfg.train.mlp_hidden)));

  if (auto strategies = file.get("fusion", "strategies")) {
    for (const auto& name : split_list(*strategies))
      cfg.strategies.push_back(parse_strategy(name));
  }
  if (auto kind = file.get("fusion", "permutation_kind"))
    cfg.permutation_kind = parse_model_kind(*kind);

  if (auto axes = file.get("fairness", "axes")) {
    cfg.axes.clear();
    for (const auto& name : split_list(*axes))
      cfg.axes.push_back(parse_axis_name(name));
  }
  cfg.min_group_size = static_cast<std::size_t>(file.get_int(
      "fairness", "min_group_size", static_cast<long>(cfg.min_group_size)));

  cfg.master_seed = static_cast<std::uint64_t>(
      file.get_int("run", "seed", static_cast<long>(cfg.master_seed)));
  cfg.out_dir = resolve(base_dir, file.get_or("run", "out_dir", ""));

  if (const char* env = std::getenv("FUSEVAL_SEED"))
    cfg.master_seed = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  return from_text(read_file(path), fs::path(path).parent_path().string());
}

const StrategyRow& ReportBundle::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  raise(ErrorKind::Argument, "no strategy row `" + name + "`");
}

namespace {

// Predictions for a subset of images, reordered to the given id sequence.
PredictionSet subset_predictions(const PredictionSet& full,
                                 const std::vector<std::string>& image_ids) {
  std::unordered_map<std::string_view, double> by_id;
  by_id.reserve(full.size());
  for (std::size_t i = 0; i < full.size(); ++i)
    by_id.emplace(full.image_ids[i], full.scores[i]);
  PredictionSet out;
  out.model_id = full.model_id;
  out.image_ids = image_ids;
  out.scores.reserve(image_ids.size());
  for (const auto& id : image_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      raise(ErrorKind::Data, "model `" + full.model_id +
                                 "` has no prediction for image `" + id + "`");
    out.scores.push_back(it->second);
  }
  return out;
}

struct SiteInputs {
  LabeledCohort cohort;  // post-exclusion
  std::vector<DemographicRecord> demographics;
  std::vector<FeatureRow> features;
  std::vector<DiagnosisRecord> diagnoses;
};

SiteInputs load_site(const std::string& diagnoses_path,
                     const std::string& demographics_path,
                     const std::string& features_path, const LabelMap& map,
                     Warnings* warnings) {
  SiteInputs site;
  site.diagnoses = parse_diagnoses_csv(read_file(diagnoses_path));
  LabeledCohort labeled = assign_labels(site.diagnoses, map);
  site.cohort = exclude_ventilated(labeled, site.diagnoses, warnings);
  site.demographics = parse_demographics_csv(read_file(demographics_path),
                                             default_category_map(), warnings);
  if (!features_path.empty())
    site.features = parse_features_csv(read_file(features_path));
  return site;
}

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (c == ':' || c == '/') c = '_';
  return out;
}

struct SplitViews {
  LabeledCohort train, valid, test;
};

SplitViews split_views(const LabeledCohort& cohort,
                       const SplitAssignment& assignment) {
  return {cohort_split(cohort, assignment, Split::Train),
          cohort_split(cohort, assignment, Split::Valid),
          cohort_split(cohort, assignment, Split::Test)};
}

std::vector<PredictionSet> slice_all(const std::vector<PredictionSet>& full,
                                     const std::vector<std::string>& ids) {
  std::vector<PredictionSet> out;
  out.reserve(full.size());
  for (const auto& p : full) out.push_back(subset_predictions(p, ids));
  return out;
}

}  // namespace

ReportBundle run_pipeline(const PipelineConfig& cfg) {
  if (cfg.strategies.empty())
    raise(ErrorKind::Usage, "no fusion strategies requested");
  if (cfg.diagnoses_path.empty() || cfg.demographics_path.empty())
    raise(ErrorKind::Usage, "config must name diagnoses and demographics files");
  if (cfg.prediction_paths.empty())
    raise(ErrorKind::Usage, "config must name at least one base prediction file");
  if (cfg.axes.empty())
    raise(ErrorKind::Usage, "fairness needs at least one axis");

  ReportBundle bundle;
  Warnings* warnings = &bundle.warnings;

  const LabelMap label_map = cfg.label_map_path.empty()
                                 ? default_label_map()
                                 : parse_label_map(read_file(cfg.label_map_path));

  SiteInputs site_a = load_site(cfg.diagnoses_path, cfg.demographics_path,
                                cfg.features_path, label_map, warnings);

  const std::uint64_t split_seed =
      cfg.split_seed ? *cfg.split_seed : derive_seed(cfg.master_seed, kSplitStream);
  const SplitAssignment assignment =
      split_by_patient(site_a.cohort, cfg.ratios, split_seed);
  const SplitViews views = split_views(site_a.cohort, assignment);

  // Base model predictions, full cohort then per-split slices.
  std::vector<PredictionSet> base_full;
  for (const auto& [id, path] : cfg.prediction_paths)
    base_full.push_back(parse_predictions_csv(read_file(path), id));
  const auto train_ids = views.train.image_ids();
  const auto valid_ids = views.valid.image_ids();
  const auto test_ids = views.test.image_ids();
  const std::vector<PredictionSet> base_train = slice_all(base_full, train_ids);
  const std::vector<PredictionSet> base_valid = slice_all(base_full, valid_ids);
  const std::vector<PredictionSet> base_test = slice_all(base_full, test_ids);

  // Row order: every base model first, then the requested strategies.
  std::vector<Strategy> ordered;
  for (const auto& [id, path] : cfg.prediction_paths) {
    Strategy s;
    s.kind = Strategy::Kind::Base;
    s.base_id = id;
    ordered.push_back(s);
  }
  std::set<std::string> present;
  for (const auto& s : ordered) present.insert(s.name());
  for (const auto& s : cfg.strategies) {
    if (present.count(s.name())) continue;
    if (s.kind == Strategy::Kind::Base) {
      bool known = false;
      for (const auto& [id, path] : cfg.prediction_paths)
        known |= id == s.base_id;
      if (!known)
        raise(ErrorKind::Usage,
              "strategy `" + s.name() + "` names an unknown base model");
      continue;  // already a base row
    }
    present.insert(s.name());
    ordered.push_back(s);
  }

  const std::uint64_t eval_stream = derive_seed(cfg.master_seed, kEvalStream);
  const std::uint64_t train_stream = derive_seed(cfg.master_seed, kTrainStream);

  TrainConfig train_template = cfg.train;

  std::optional<Dendrogram> dendrogram;
  // Multisite state kept for fairness evaluation (prefixed namespace).
  std::optional<SiteData> multisite_merged;
  std::optional<LabeledCohort> multisite_test;

  std::size_t strategy_index = 0;
  for (const auto& strategy : ordered) {
    StrategyRow row;
    row.name = strategy.name();
    const std::uint64_t eval_seed = derive_seed(eval_stream, strategy_index);
    const std::uint64_t train_seed = derive_seed(train_stream, strategy_index);
    ++strategy_index;

    LabeledCohort eval_cohort = views.test;  // overridden by multisite

    switch (strategy.kind) {
      case Strategy::Kind::Base: {
        for (std::size_t m = 0; m < base_test.size(); ++m)
          if (cfg.prediction_paths[m].first == strategy.base_id)
            row.test_predictions = base_test[m];
        break;
      }
      case Strategy::Kind::BagUnweighted: {
        row.test_predictions = unweighted_average(base_test);
        break;
      }
      case Strategy::Kind::BagWeighted: {
        const DistanceMatrix distances = cosine_distance_matrix(base_valid);
        dendrogram = upgma_linkage(distances);
        const WeightVector weights = dendrogram_weights(*dendrogram);
        row.test_predictions = weighted_average(base_test, weights);
        break;
      }
      case Strategy::Kind::Stack: {
        StackInputs inputs;
        inputs.train = base_train;
        inputs.y_train = views.train.labels();
        inputs.valid = base_valid;
        inputs.y_valid = views.valid.labels();
        inputs.test = base_test;
        TrainConfig tc = train_template;
        tc.seed = train_seed;
        row.test_predictions = stack(strategy.stack_kind, inputs, tc);
        break;
      }
      case Strategy::Kind::Multimodal: {
        if (site_a.features.empty())
          raise(ErrorKind::Usage,
                "data:multimodal needs a [data] features file");
        const Matrix x_train =
            multimodal_join(site_a.features, site_a.demographics, views.train);
        const Matrix x_valid =
            multimodal_join(site_a.features, site_a.demographics, views.valid);
        const Matrix x_test =
            multimodal_join(site_a.features, site_a.demographics, views.test);
        TrainConfig tc = train_template;
        tc.seed = train_seed;
        Model head = Model::train(ModelKind::MlpHead, x_train,
                                  views.train.labels(), x_valid,
                                  views.valid.labels(), tc);
        row.test_predictions.model_id = row.name;
        row.test_predictions.image_ids = test_ids;
        row.test_predictions.scores = head.predict(x_test);
        break;
      }
      case Strategy::Kind::Multisite: {
        if (cfg.diagnoses_b_path.empty())
          raise(ErrorKind::Usage,
                "data:multisite needs a [data_b] section with a second site");
        if (site_a.features.empty() || cfg.features_b_path.empty())
          raise(ErrorKind::Usage,
                "data:multisite needs feature files for both sites");
        SiteInputs site_b =
            load_site(cfg.diagnoses_b_path, cfg.demographics_b_path,
                      cfg.features_b_path, label_map, warnings);
        const SplitAssignment assignment_b = split_by_patient(
            site_b.cohort, cfg.ratios, derive_seed(split_seed, 1));

        SiteData a{site_a.cohort, site_a.demographics, site_a.features};
        SiteData b{site_b.cohort, site_b.demographics, site_b.features};
        SiteData merged = merge_sites(a, b, default_category_map(), warnings);

        // Split lookup keyed by the prefixed patient ids.
        const std::string prefix_a =
            site_a.cohort.rows.empty() ? "" : site_a.cohort.rows[0].site + ".";
        SplitAssignment merged_assignment;
        merged_assignment.seed = split_seed;
        merged_assignment.ratios = cfg.ratios;
        for (const auto& [pid, split] : assignment.by_patient)
          merged_assignment.by_patient.emplace(
              pid.rfind(prefix_a, 0) == 0 ? pid : prefix_a + pid, split);
        const std::string prefix_b =
            site_b.cohort.rows.empty() ? "" : site_b.cohort.rows[0].site + ".";
        for (const auto& [pid, split] : assignment_b.by_patient)
          merged_assignment.by_patient.emplace(
              pid.rfind(prefix_b, 0) == 0 ? pid : prefix_b + pid, split);

        const LabeledCohort merged_train =
            cohort_split(merged.cohort, merged_assignment, Split::Train);
        const LabeledCohort merged_valid =
            cohort_split(merged.cohort, merged_assignment, Split::Valid);
        // Evaluation stays on the primary site's test split.
        LabeledCohort test_a;
        const std::string site_a_tag =
            site_a.cohort.rows.empty() ? "" : site_a.cohort.rows[0].site;
        for (const auto& r : merged.cohort.rows)
          if (r.site == site_a_tag &&
              merged_assignment.of(r.patient_id) == Split::Test)
            test_a.rows.push_back(r);

        const Matrix x_train = feature_matrix(merged.features, merged_train);
        const Matrix x_valid = feature_matrix(merged.features, merged_valid);
        const Matrix x_test = feature_matrix(merged.features, test_a);
        TrainConfig tc = train_template;
        tc.seed = train_seed;
        Model head =
            Model::train(ModelKind::MlpHead, x_train, merged_train.labels(),
                         x_valid, merged_valid.labels(), tc);
        row.test_predictions.model_id = row.name;
        row.test_predictions.image_ids = test_a.image_ids();
        row.test_predictions.scores = head.predict(x_test);
        eval_cohort = test_a;
        multisite_merged = std::move(merged);
        multisite_test = eval_cohort;
        break;
      }
      case Strategy::Kind::Permutation: {
        SupervisedData data;
        data.x_train = Matrix(views.train.size(), base_train.size());
        for (std::size_t m = 0; m < base_train.size(); ++m)
          for (std::size_t i = 0; i < base_train[m].size(); ++i)
            data.x_train.at(i, m) = base_train[m].scores[i];
        data.y_train = views.train.labels();
        data.x_valid = Matrix(views.valid.size(), base_valid.size());
        for (std::size_t m = 0; m < base_valid.size(); ++m)
          for (std::size_t i = 0; i < base_valid[m].size(); ++i)
            data.x_valid.at(i, m) = base_valid[m].scores[i];
        data.y_valid = views.valid.labels();
        data.x_test = Matrix(views.test.size(), base_test.size());
        for (std::size_t m = 0; m < base_test.size(); ++m)
          for (std::size_t i = 0; i < base_test[m].size(); ++i)
            data.x_test.at(i, m) = base_test[m].scores[i];
        data.y_test = views.test.labels();

        const ModelKind kind = cfg.permutation_kind;
        TrainConfig tc = train_template;
        tc.seed = train_seed;
        TrainEvalFn fn = [kind, tc](const Matrix& xt, const std::vector<int>& yt,
                                    const Matrix& xv, const std::vector<int>& yv,
                                    const Matrix& xe) {
          return Model::train(kind, xt, yt, xv, yv, tc).predict(xe);
        };
        row.report = permutation_baseline(
            fn, data, cfg.threshold, cfg.bootstrap,
            derive_seed(cfg.master_seed, kPermutationStream));
        row.in_fairness = false;
        bundle.rows.push_back(std::move(row));
        continue;
      }
    }

    row.report = evaluate(align(row.test_predictions, eval_cohort),
                          cfg.threshold, cfg.bootstrap, eval_seed);
    bundle.rows.push_back(std::move(row));
  }

  // Fairness: per strategy x axis over its own test slice.
  std::vector<std::string> fairness_strategies;
  std::vector<std::vector<AxisSummary>> summaries;
  for (const auto& row : bundle.rows) {
    if (!row.in_fairness) continue;
    const bool is_multisite = row.name == "data:multisite";
    const LabeledCohort& cohort =
        is_multisite ? *multisite_test : views.test;
    const std::vector<DemographicRecord>& demographics =
        is_multisite ? multisite_merged->demographics : site_a.demographics;
    std::vector<AxisSummary> per_axis;
    for (Axis axis : cfg.axes) {
      const SubgroupReport report =
          subgroup_metrics(row.test_predictions, cohort, demographics, axis,
                           cfg.min_group_size);
      for (const auto& g : report.groups)
        if (g.small_sample)
          warn(warnings, row.name + " " + axis_name(axis) + " group `" +
                             g.group + "` has only " +
                             std::to_string(g.n_rows) + " rows");
      per_axis.push_back(axis_summary(report));
    }
    fairness_strategies.push_back(row.name);
    summaries.push_back(std::move(per_axis));
  }
  bundle.fairness =
      build_fairness_table(fairness_strategies, cfg.axes, summaries);

  // Run metadata: everything needed to reproduce the run.
  json meta;
  meta["config_hash"] = cfg.config_hash;
  meta["master_seed"] = cfg.master_seed;
  meta["split_seed"] = split_seed;
  meta["bootstrap"] = cfg.bootstrap;
  meta["threshold"] = cfg.threshold;
  meta["ratios"] = {cfg.ratios.train, cfg.ratios.valid, cfg.ratios.test};
  meta["rows"] = {{"cohort", site_a.cohort.size()},
                  {"train", views.train.size()},
                  {"valid", views.valid.size()},
                  {"test", views.test.size()}};
  json names = json::array();
  for (const auto& row : bundle.rows) names.push_back(row.name);
  meta["strategies"] = names;
  json warn_list = json::array();
  for (const auto& w : bundle.warnings.messages) warn_list.push_back(w);
  meta["warnings"] = warn_list;
  meta["version"] = 1;
  bundle.run_meta_json = meta.dump(2) + "\n";

  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "predictions");
    StrategyReports reports;
    for (const auto& row : bundle.rows) reports.emplace_back(row.name, row.report);
    const fs::path out(cfg.out_dir);
    write_file((out / "metrics.csv").string(), metric_table_csv(reports));
    write_file((out / "metrics.json").string(), metric_table_json(reports));
    write_file((out / "metrics.md").string(), metric_table_markdown(reports));
    write_file((out / "fairness.csv").string(),
               fairness_table_csv(bundle.fairness));
    write_file((out / "fairness.json").string(),
               fairness_table_json(bundle.fairness));
    write_file((out / "fairness.md").string(),
               fairness_table_markdown(bundle.fairness));
    write_file((out / "run_meta.json").string(), bundle.run_meta_json);
    if (dendrogram)
      write_file((out / "dendrogram.json").string(),
                 dendrogram_to_json(*dendrogram));
    for (const auto& row : bundle.rows) {
      if (row.test_predictions.image_ids.empty()) continue;
      write_file((out / "predictions" /
                  (sanitize_filename(row.name) + ".csv")).string(),
                 write_predictions_csv(row.test_predictions));
    }
  }
  return bundle;
}

}  // namespace fuseval
