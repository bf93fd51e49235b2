// Command-line surface for the fusion/evaluation library: cohort labeling,
// patient-level splits, preprocessing, fusion strategies, bootstrap
// evaluation, permutation baseline, fairness auditing, synthetic data, and
// the full pipeline run.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuseval/cohort.hpp"
#include "fuseval/config.hpp"
#include "fuseval/csv.hpp"
#include "fuseval/error.hpp"
#include "fuseval/fairness.hpp"
#include "fuseval/fusion.hpp"
#include "fuseval/learners.hpp"
#include "fuseval/metrics.hpp"
#include "fuseval/pgm.hpp"
#include "fuseval/pipeline.hpp"
#include "fuseval/preprocess.hpp"
#include "fuseval/rng.hpp"
#include "fuseval/stats.hpp"
#include "fuseval/synth.hpp"
#include "fuseval/tables.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fuseval;

namespace {

void print_warnings(const Warnings& warnings) {
  for (const auto& w : warnings.messages) std::cerr << "warning: " << w << "\n";
}

// `id=path` or bare `path` (id = filename stem).
std::pair<std::string, std::string> parse_pred_spec(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq != std::string::npos)
    return {spec.substr(0, eq), spec.substr(eq + 1)};
  return {fs::path(spec).stem().string(), spec};
}

std::vector<PredictionSet> load_predictions(
    const std::vector<std::string>& specs) {
  std::vector<PredictionSet> out;
  for (const auto& spec : specs) {
    auto [id, path] = parse_pred_spec(spec);
    out.push_back(parse_predictions_csv(read_file(path), id));
  }
  return out;
}

SplitRatios parse_ratios(const std::string& text) {
  auto parts = split_list(text);
  if (parts.size() != 3)
    raise(ErrorKind::Usage, "--ratios wants three comma-separated numbers");
  try {
    return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    raise(ErrorKind::Usage, "--ratios: bad number");
  }
}

// `--out report` writes all three formats; an explicit extension writes one.
void write_report_files(const std::string& out,
                        const std::function<std::string(TableFormat)>& render) {
  const std::string ext = fs::path(out).extension().string();
  if (ext == ".csv" || ext == ".json" || ext == ".md") {
    write_file(out, render(parse_table_format(ext.substr(1))));
    return;
  }
  write_file(out + ".csv", render(TableFormat::Csv));
  write_file(out + ".json", render(TableFormat::Json));
  write_file(out + ".md", render(TableFormat::Markdown));
}

PredictionSet slice_by_split(const PredictionSet& full,
                             const LabeledCohort& cohort_slice) {
  std::map<std::string, double> by_id;
  for (std::size_t i = 0; i < full.size(); ++i)
    by_id.emplace(full.image_ids[i], full.scores[i]);
  PredictionSet out;
  out.model_id = full.model_id;
  for (const auto& row : cohort_slice.rows) {
    auto it = by_id.find(row.image_id);
    if (it == by_id.end())
      raise(ErrorKind::Data, "model `" + full.model_id +
                                 "` has no prediction for image `" +
                                 row.image_id + "`");
    out.image_ids.push_back(row.image_id);
    out.scores.push_back(it->second);
  }
  return out;
}

SplitAssignment load_assignment(const std::string& path,
                                const SplitRatios& ratios) {
  SplitAssignment a;
  a.by_patient = parse_splits_csv(read_file(path));
  a.ratios = ratios;
  return a;
}

int run_preprocess(const std::string& in_dir, const std::string& out_dir,
                   std::size_t size) {
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      inputs.push_back(entry.path());
  std::sort(inputs.begin(), inputs.end());
  fs::create_directories(out_dir);
  for (const auto& path : inputs) {
    GrayImage img = parse_pgm(read_file(path.string()));
    GrayImage processed = resize_bilinear(equalize_histogram(img), size, size);
    write_file((fs::path(out_dir) / path.filename()).string(),
               write_pgm(processed));
  }
  std::cout << "preprocessed " << inputs.size() << " images to " << size << "x"
            << size << "\n";
  return 0;
}

json report_to_json(const MetricReport& report) {
  json metrics;
  for (MetricId id : kAllMetrics) {
    const auto& est = report.of(id);
    metrics[metric_name(id)] = {{"point", est.interval.point},
                                {"lo", est.interval.lo},
                                {"hi", est.interval.hi},
                                {"n_resamples", est.interval.n_resamples},
                                {"full_sample", est.full_sample}};
  }
  return metrics;
}

StrategyReports reports_from_json(const json& j) {
  StrategyReports out;
  for (const auto& strategy : j.at("strategies")) {
    MetricReport report;
    for (MetricId id : kAllMetrics) {
      const auto& m = strategy.at("metrics").at(metric_name(id));
      auto& est = report.of(id);
      est.interval.point = m.at("point").get<double>();
      est.interval.lo = m.at("lo").get<double>();
      est.interval.hi = m.at("hi").get<double>();
      est.interval.n_resamples = m.at("n_resamples").get<std::size_t>();
      est.full_sample = m.at("full_sample").get<double>();
    }
    out.emplace_back(strategy.at("name").get<std::string>(), report);
  }
  return out;
}

FairnessTable fairness_from_json(const json& j) {
  FairnessTable table;
  std::vector<std::vector<AxisSummary>> summaries;
  bool first = true;
  std::vector<std::vector<bool>> stars;
  for (const auto& strategy : j.at("strategies")) {
    table.strategies.push_back(strategy.at("name").get<std::string>());
    std::vector<AxisSummary> row;
    std::vector<bool> star_row;
    std::vector<Axis> axes;
    for (const auto& [axis, cell] : strategy.at("axes").items()) {
      axes.push_back(parse_axis_name(axis));
      row.push_back({cell.at("mean_auc").get<double>(),
                     cell.at("sd_auc").get<double>()});
      star_row.push_back(cell.at("star").get<bool>());
    }
    if (first) {
      table.axes = axes;
      first = false;
    }
    summaries.push_back(std::move(row));
    stars.push_back(std::move(star_row));
  }
  table.cells.resize(table.strategies.size() * table.axes.size());
  for (std::size_t s = 0; s < table.strategies.size(); ++s)
    for (std::size_t a = 0; a < table.axes.size(); ++a)
      table.at(s, a) = {summaries[s][a].mean_auc, summaries[s][a].sd_auc,
                        stars[s][a]};
  return table;
}

void write_synth_site(const SynthConfig& cfg, const fs::path& dir,
                      const std::string& suffix) {
  SynthDataset data = generate_cohort(cfg);
  auto preds = generate_base_predictions(data, cfg);
  auto features = generate_features(data, cfg);
  write_file((dir / ("diagnoses" + suffix + ".csv")).string(),
             write_diagnoses_csv(data.diagnoses));
  write_file((dir / ("demographics" + suffix + ".csv")).string(),
             write_demographics_csv(data.demographics));
  write_file((dir / ("features" + suffix + ".csv")).string(),
             write_features_csv(features));
  write_file((dir / ("cohort" + suffix + ".csv")).string(),
             write_cohort_csv(data.cohort));
  for (const auto& p : preds)
    write_file((dir / ("preds_" + p.model_id + suffix + ".csv")).string(),
               write_predictions_csv(p));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model fusion and fairness evaluation toolkit"};
  app.require_subcommand(1);

  // ---- preprocess ----
  auto* cmd_pre = app.add_subcommand("preprocess",
                                     "histogram-equalize and resize PGM images");
  std::string pre_in, pre_out;
  std::size_t pre_size = 256;
  cmd_pre->add_option("--in", pre_in, "input directory of .pgm files")->required();
  cmd_pre->add_option("--out", pre_out, "output directory")->required();
  cmd_pre->add_option("--size", pre_size, "target width/height");

  // ---- label ----
  auto* cmd_label = app.add_subcommand("label", "assign binary labels from ICD codes");
  std::string label_diag, label_map_path, label_out;
  bool label_json = false;
  bool label_keep_ventilated = false;
  cmd_label->add_option("--diagnoses", label_diag, "diagnoses CSV")->required();
  cmd_label->add_option("--map", label_map_path, "label map config");
  cmd_label->add_option("--out", label_out, "cohort CSV to write");
  cmd_label->add_flag("--keep-ventilated", label_keep_ventilated,
                      "skip the ventilation exclusion");
  cmd_label->add_flag("--json", label_json, "machine-readable summary");

  // ---- split ----
  auto* cmd_split = app.add_subcommand("split", "leakage-free patient-level split");
  std::string split_labels, split_out, split_ratios = "0.64,0.16,0.20";
  std::uint64_t split_seed = 0;
  bool split_json = false;
  cmd_split->add_option("--labels", split_labels, "cohort CSV")->required();
  cmd_split->add_option("--seed", split_seed, "shuffle seed")->required();
  cmd_split->add_option("--ratios", split_ratios, "train,valid,test ratios");
  cmd_split->add_option("--out", split_out, "splits CSV to write");
  cmd_split->add_flag("--json", split_json, "machine-readable summary");

  // ---- weights ----
  auto* cmd_weights = app.add_subcommand("weights", "class weights from label counts");
  std::string weights_labels;
  bool weights_json = false;
  cmd_weights->add_option("--labels", weights_labels, "cohort CSV")->required();
  cmd_weights->add_flag("--json", weights_json, "machine-readable output");

  // ---- chisq ----
  auto* cmd_chisq = app.add_subcommand("chisq", "chi-square independence test");
  std::string chisq_table;
  bool chisq_json = false;
  cmd_chisq->add_option("--table", chisq_table, "contingency counts CSV")->required();
  cmd_chisq->add_flag("--json", chisq_json, "machine-readable output");

  // ---- fuse ----
  auto* cmd_fuse = app.add_subcommand("fuse", "run one fusion strategy");
  std::string fuse_strategy, fuse_out, fuse_dendrogram;
  std::vector<std::string> fuse_preds, fuse_valid_preds;
  std::string fuse_labels, fuse_splits, fuse_features, fuse_demo;
  std::string fuse_labels_b, fuse_features_b, fuse_demo_b;
  std::string fuse_ratios = "0.64,0.16,0.20";
  std::uint64_t fuse_seed = 0;
  cmd_fuse->add_option("--strategy", fuse_strategy,
                       "unweighted|weighted|stack:<kind>|multisite|multimodal")
      ->required();
  cmd_fuse->add_option("--preds", fuse_preds, "prediction CSVs (id=path or path)")
      ->delimiter(',');
  cmd_fuse->add_option("--valid-preds", fuse_valid_preds,
                       "validation-split predictions (weighted bagging)")
      ->delimiter(',');
  cmd_fuse->add_option("--labels", fuse_labels, "cohort CSV");
  cmd_fuse->add_option("--splits", fuse_splits, "splits CSV");
  cmd_fuse->add_option("--features", fuse_features, "feature CSV");
  cmd_fuse->add_option("--demo", fuse_demo, "demographics CSV");
  cmd_fuse->add_option("--labels-b", fuse_labels_b, "second-site cohort CSV");
  cmd_fuse->add_option("--features-b", fuse_features_b, "second-site feature CSV");
  cmd_fuse->add_option("--demo-b", fuse_demo_b, "second-site demographics CSV");
  cmd_fuse->add_option("--ratios", fuse_ratios, "ratios when splitting internally");
  cmd_fuse->add_option("--seed", fuse_seed, "training / split seed");
  cmd_fuse->add_option("--out", fuse_out, "fused predictions CSV")->required();
  cmd_fuse->add_option("--dendrogram", fuse_dendrogram, "dendrogram JSON out");

  // ---- eval ----
  auto* cmd_eval = app.add_subcommand("eval", "metric report with bootstrap CIs");
  std::string eval_preds, eval_labels, eval_out;
  double eval_threshold = 0.5;
  std::size_t eval_boot = 1000;
  std::uint64_t eval_seed = 0;
  bool eval_json = false;
  cmd_eval->add_option("--preds", eval_preds, "predictions CSV")->required();
  cmd_eval->add_option("--labels", eval_labels, "cohort CSV")->required();
  cmd_eval->add_option("--threshold", eval_threshold, "decision threshold");
  cmd_eval->add_option("--boot", eval_boot, "bootstrap resamples");
  cmd_eval->add_option("--seed", eval_seed, "bootstrap seed");
  cmd_eval->add_option("--out", eval_out, "report stem or file (.csv/.json/.md)");
  cmd_eval->add_flag("--json", eval_json, "JSON report to stdout");

  // ---- fairness ----
  auto* cmd_fair = app.add_subcommand("fairness", "subgroup AUC audit");
  std::string fair_preds, fair_labels, fair_demo, fair_out;
  std::string fair_axes = "race_ethnicity,sex,age";
  std::size_t fair_min_group = 10;
  bool fair_json = false;
  cmd_fair->add_option("--preds", fair_preds, "predictions CSV")->required();
  cmd_fair->add_option("--labels", fair_labels, "cohort CSV")->required();
  cmd_fair->add_option("--demo", fair_demo, "demographics CSV")->required();
  cmd_fair->add_option("--axes", fair_axes, "comma-separated axes");
  cmd_fair->add_option("--min-group", fair_min_group, "small-sample warning size");
  cmd_fair->add_option("--out", fair_out, "report stem or file");
  cmd_fair->add_flag("--json", fair_json, "JSON report to stdout");

  // ---- permtest ----
  auto* cmd_perm = app.add_subcommand("permtest", "permutation-null baseline");
  std::vector<std::string> perm_preds;
  std::string perm_labels, perm_splits, perm_kind = "logistic", perm_out;
  double perm_threshold = 0.5;
  std::size_t perm_boot = 1000;
  std::uint64_t perm_seed = 0;
  bool perm_json = false;
  bool perm_identity = false;
  cmd_perm->add_option("--preds", perm_preds, "base prediction CSVs")
      ->required()
      ->delimiter(',');
  cmd_perm->add_option("--labels", perm_labels, "cohort CSV")->required();
  cmd_perm->add_option("--splits", perm_splits, "splits CSV")->required();
  cmd_perm->add_option("--kind", perm_kind, "meta-model kind");
  cmd_perm->add_option("--threshold", perm_threshold, "decision threshold");
  cmd_perm->add_option("--boot", perm_boot, "bootstrap resamples");
  cmd_perm->add_option("--seed", perm_seed, "permutation seed");
  cmd_perm->add_flag("--identity", perm_identity,
                     "disable the permutation (sanity baseline)");
  cmd_perm->add_option("--out", perm_out, "report stem or file");
  cmd_perm->add_flag("--json", perm_json, "JSON report to stdout");

  // ---- synth ----
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_config, synth_out_dir;
  bool synth_site_b = false;
  std::optional<std::uint64_t> synth_seed;
  cmd_synth->add_option("--config", synth_config, "synth config file");
  cmd_synth->add_option("--out-dir", synth_out_dir, "output directory")->required();
  cmd_synth->add_flag("--site-b", synth_site_b,
                      "also emit a second site and wire it into run.cfg");
  std::uint64_t synth_seed_value = 0;
  auto* synth_seed_opt =
      cmd_synth->add_option("--seed", synth_seed_value, "override the seed");

  // ---- report ----
  auto* cmd_report = app.add_subcommand("report", "re-render saved reports");
  std::string report_in, report_format = "md", report_out;
  cmd_report->add_option("--in", report_in, "run output directory")->required();
  cmd_report->add_option("--format", report_format, "csv|json|md");
  cmd_report->add_option("--out", report_out, "output file (stdout when absent)");

  // ---- run ----
  auto* cmd_run = app.add_subcommand("run", "full pipeline from a config file");
  std::string run_config;
  bool run_json = false;
  cmd_run->add_option("--config", run_config, "pipeline config")->required();
  cmd_run->add_flag("--json", run_json, "print run metadata JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*cmd_pre) return run_preprocess(pre_in, pre_out, pre_size);

    if (*cmd_label) {
      Warnings warnings;
      const LabelMap map = label_map_path.empty()
                               ? default_label_map()
                               : parse_label_map(read_file(label_map_path));
      auto diagnoses = parse_diagnoses_csv(read_file(label_diag));
      LabeledCohort cohort = assign_labels(diagnoses, map);
      if (!label_keep_ventilated)
        cohort = exclude_ventilated(cohort, diagnoses, &warnings);
      print_warnings(warnings);
      if (!label_out.empty()) write_file(label_out, write_cohort_csv(cohort));
      std::size_t positives = 0;
      for (const auto& r : cohort.rows) positives += r.label;
      if (label_json) {
        json j = {{"rows", cohort.size()},
                  {"positives", positives},
                  {"excluded", diagnoses.size() - cohort.size()}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "cohort rows: " << cohort.size()
                  << " (positives: " << positives << ", excluded "
                  << diagnoses.size() - cohort.size() << " ventilated)\n";
      }
      return 0;
    }

    if (*cmd_split) {
      const LabeledCohort cohort = parse_cohort_csv(read_file(split_labels));
      const SplitAssignment assignment =
          split_by_patient(cohort, parse_ratios(split_ratios), split_seed);
      if (!split_out.empty())
        write_file(split_out, write_splits_csv(assignment.by_patient));
      std::size_t train = 0, valid = 0, test = 0;
      for (const auto& [p, s] : assignment.by_patient) {
        if (s == Split::Train) ++train;
        else if (s == Split::Valid) ++valid;
        else ++test;
      }
      if (split_json) {
        json j = {{"patients", assignment.by_patient.size()},
                  {"train", train},
                  {"valid", valid},
                  {"test", test},
                  {"seed", split_seed}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "patients: " << assignment.by_patient.size() << " -> train "
                  << train << ", valid " << valid << ", test " << test << "\n";
      }
      return 0;
    }

    if (*cmd_weights) {
      const LabeledCohort cohort = parse_cohort_csv(read_file(weights_labels));
      const ClassWeights w = class_weights(cohort);
      if (weights_json) {
        json j = {{"w_pos", w.positive}, {"w_neg", w.negative}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "w_pos = " << format_fixed(w.positive, 2)
                  << ", w_neg = " << format_fixed(w.negative, 2) << "\n";
      }
      return 0;
    }

    if (*cmd_chisq) {
      const TestResult result =
          chi_square_independence(parse_contingency_csv(read_file(chisq_table)));
      if (chisq_json) {
        json j = {{"statistic", result.statistic},
                  {"dof", result.dof},
                  {"p_value", result.p_value}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "statistic = " << result.statistic << ", dof = "
                  << result.dof << ", p = " << result.p_value << "\n";
      }
      return 0;
    }

    if (*cmd_fuse) {
      PredictionSet fused;
      if (fuse_strategy == "unweighted") {
        auto models = load_predictions(fuse_preds);
        fused = unweighted_average(models);
      } else if (fuse_strategy == "weighted") {
        auto models = load_predictions(fuse_preds);
        if (fuse_valid_preds.empty())
          raise(ErrorKind::Usage, "weighted bagging needs --valid-preds");
        auto valid_models = load_predictions(fuse_valid_preds);
        const Dendrogram tree =
            upgma_linkage(cosine_distance_matrix(valid_models));
        if (!fuse_dendrogram.empty())
          write_file(fuse_dendrogram, dendrogram_to_json(tree));
        fused = weighted_average(models, dendrogram_weights(tree));
      } else if (fuse_strategy.rfind("stack:", 0) == 0) {
        if (fuse_labels.empty() || fuse_splits.empty())
          raise(ErrorKind::Usage, "stacking needs --labels and --splits");
        const LabeledCohort cohort = parse_cohort_csv(read_file(fuse_labels));
        const SplitAssignment assignment =
            load_assignment(fuse_splits, parse_ratios(fuse_ratios));
        auto full = load_predictions(fuse_preds);
        StackInputs inputs;
        const LabeledCohort train = cohort_split(cohort, assignment, Split::Train);
        const LabeledCohort valid = cohort_split(cohort, assignment, Split::Valid);
        const LabeledCohort test = cohort_split(cohort, assignment, Split::Test);
        for (const auto& m : full) {
          inputs.train.push_back(slice_by_split(m, train));
          inputs.valid.push_back(slice_by_split(m, valid));
          inputs.test.push_back(slice_by_split(m, test));
        }
        inputs.y_train = train.labels();
        inputs.y_valid = valid.labels();
        TrainConfig tc;
        tc.seed = fuse_seed;
        fused = stack(parse_strategy(fuse_strategy).stack_kind, inputs, tc);
      } else if (fuse_strategy == "multimodal") {
        if (fuse_labels.empty() || fuse_splits.empty() || fuse_features.empty() ||
            fuse_demo.empty())
          raise(ErrorKind::Usage,
                "multimodal needs --labels, --splits, --features, --demo");
        const LabeledCohort cohort = parse_cohort_csv(read_file(fuse_labels));
        const SplitAssignment assignment =
            load_assignment(fuse_splits, parse_ratios(fuse_ratios));
        auto features = parse_features_csv(read_file(fuse_features));
        Warnings warnings;
        auto demo = parse_demographics_csv(read_file(fuse_demo),
                                           default_category_map(), &warnings);
        print_warnings(warnings);
        const LabeledCohort train = cohort_split(cohort, assignment, Split::Train);
        const LabeledCohort valid = cohort_split(cohort, assignment, Split::Valid);
        const LabeledCohort test = cohort_split(cohort, assignment, Split::Test);
        TrainConfig tc;
        tc.seed = fuse_seed;
        Model head = Model::train(
            ModelKind::MlpHead, multimodal_join(features, demo, train),
            train.labels(), multimodal_join(features, demo, valid),
            valid.labels(), tc);
        fused.model_id = "data:multimodal";
        fused.image_ids = test.image_ids();
        fused.scores = head.predict(multimodal_join(features, demo, test));
      } else if (fuse_strategy == "multisite") {
        if (fuse_labels.empty() || fuse_labels_b.empty() ||
            fuse_features.empty() || fuse_features_b.empty() ||
            fuse_demo.empty() || fuse_demo_b.empty())
          raise(ErrorKind::Usage,
                "multisite needs --labels/--features/--demo for both sites");
        Warnings warnings;
        SiteData a{parse_cohort_csv(read_file(fuse_labels)),
                   parse_demographics_csv(read_file(fuse_demo),
                                          default_category_map(), &warnings),
                   parse_features_csv(read_file(fuse_features))};
        SiteData b{parse_cohort_csv(read_file(fuse_labels_b)),
                   parse_demographics_csv(read_file(fuse_demo_b),
                                          default_category_map(), &warnings),
                   parse_features_csv(read_file(fuse_features_b))};
        print_warnings(warnings);
        const SplitRatios ratios = parse_ratios(fuse_ratios);
        const SplitAssignment sa = split_by_patient(a.cohort, ratios, fuse_seed);
        const SplitAssignment sb =
            split_by_patient(b.cohort, ratios, derive_seed(fuse_seed, 1));
        SiteData merged = merge_sites(a, b, default_category_map(), &warnings);
        auto prefixed_assign = [&](const SiteData& site,
                                   const SplitAssignment& assign) {
          std::map<std::string, Split> out;
          const std::string prefix =
              site.cohort.rows.empty() ? "" : site.cohort.rows[0].site + ".";
          for (const auto& [pid, split] : assign.by_patient)
            out.emplace(pid.rfind(prefix, 0) == 0 ? pid : prefix + pid, split);
          return out;
        };
        SplitAssignment merged_assign;
        merged_assign.ratios = ratios;
        for (auto& [k, v] : prefixed_assign(a, sa))
          merged_assign.by_patient.emplace(k, v);
        for (auto& [k, v] : prefixed_assign(b, sb))
          merged_assign.by_patient.emplace(k, v);
        const LabeledCohort train =
            cohort_split(merged.cohort, merged_assign, Split::Train);
        const LabeledCohort valid =
            cohort_split(merged.cohort, merged_assign, Split::Valid);
        LabeledCohort test;
        const std::string site_a_tag =
            a.cohort.rows.empty() ? "" : a.cohort.rows[0].site;
        for (const auto& r : merged.cohort.rows)
          if (r.site == site_a_tag && merged_assign.of(r.patient_id) == Split::Test)
            test.rows.push_back(r);
        TrainConfig tc;
        tc.seed = fuse_seed;
        Model head = Model::train(ModelKind::MlpHead,
                                  feature_matrix(merged.features, train),
                                  train.labels(),
                                  feature_matrix(merged.features, valid),
                                  valid.labels(), tc);
        fused.model_id = "data:multisite";
        fused.image_ids = test.image_ids();
        fused.scores = head.predict(feature_matrix(merged.features, test));
      } else {
        raise(ErrorKind::Usage, "unknown fuse strategy `" + fuse_strategy + "`");
      }
      write_file(fuse_out, write_predictions_csv(fused));
      std::cout << "wrote " << fused.size() << " fused predictions to "
                << fuse_out << "\n";
      return 0;
    }

    if (*cmd_eval) {
      const PredictionSet preds =
          parse_predictions_csv(read_file(eval_preds),
                                fs::path(eval_preds).stem().string());
      const LabeledCohort cohort = parse_cohort_csv(read_file(eval_labels));
      const MetricReport report = evaluate(align(preds, cohort), eval_threshold,
                                           eval_boot, eval_seed);
      StrategyReports reports{{preds.model_id, report}};
      if (!eval_out.empty())
        write_report_files(eval_out, [&](TableFormat f) {
          return write_metric_table(reports, f);
        });
      if (eval_json)
        std::cout << json({{"name", preds.model_id},
                           {"metrics", report_to_json(report)}})
                         .dump()
                  << "\n";
      else
        std::cout << metric_table_markdown(reports);
      return 0;
    }

    if (*cmd_fair) {
      const PredictionSet preds =
          parse_predictions_csv(read_file(fair_preds),
                                fs::path(fair_preds).stem().string());
      const LabeledCohort cohort = parse_cohort_csv(read_file(fair_labels));
      Warnings warnings;
      const auto demo = parse_demographics_csv(read_file(fair_demo),
                                               default_category_map(), &warnings);
      std::vector<Axis> axes;
      for (const auto& name : split_list(fair_axes))
        axes.push_back(parse_axis_name(name));
      std::vector<AxisSummary> summaries;
      json detail = json::array();
      for (Axis axis : axes) {
        const SubgroupReport report =
            subgroup_metrics(preds, cohort, demo, axis, fair_min_group);
        summaries.push_back(axis_summary(report));
        json groups = json::array();
        for (const auto& g : report.groups)
          groups.push_back({{"group", g.group},
                            {"auc", g.auc},
                            {"n_rows", g.n_rows},
                            {"small_sample", g.small_sample}});
        json excluded = json::array();
        for (const auto& e : report.excluded)
          excluded.push_back(
              {{"group", e.group}, {"reason", e.reason}, {"n_rows", e.n_rows}});
        detail.push_back({{"axis", axis_name(axis)},
                          {"groups", groups},
                          {"excluded", excluded}});
      }
      print_warnings(warnings);
      const FairnessTable table =
          build_fairness_table({preds.model_id}, axes, {summaries});
      if (!fair_out.empty())
        write_report_files(fair_out, [&](TableFormat f) {
          return write_fairness_table(table, f);
        });
      if (fair_json)
        std::cout << json({{"table", json::parse(fairness_table_json(table))},
                           {"detail", detail}})
                         .dump()
                  << "\n";
      else
        std::cout << fairness_table_markdown(table);
      return 0;
    }

    if (*cmd_perm) {
      const LabeledCohort cohort = parse_cohort_csv(read_file(perm_labels));
      const SplitAssignment assignment =
          load_assignment(perm_splits, SplitRatios{});
      auto full = load_predictions(perm_preds);
      const LabeledCohort train = cohort_split(cohort, assignment, Split::Train);
      const LabeledCohort valid = cohort_split(cohort, assignment, Split::Valid);
      const LabeledCohort test = cohort_split(cohort, assignment, Split::Test);
      SupervisedData data;
      data.x_train = Matrix(train.size(), full.size());
      data.x_valid = Matrix(valid.size(), full.size());
      data.x_test = Matrix(test.size(), full.size());
      for (std::size_t m = 0; m < full.size(); ++m) {
        const PredictionSet pt = slice_by_split(full[m], train);
        const PredictionSet pv = slice_by_split(full[m], valid);
        const PredictionSet pe = slice_by_split(full[m], test);
        for (std::size_t i = 0; i < pt.size(); ++i) data.x_train.at(i, m) = pt.scores[i];
        for (std::size_t i = 0; i < pv.size(); ++i) data.x_valid.at(i, m) = pv.scores[i];
        for (std::size_t i = 0; i < pe.size(); ++i) data.x_test.at(i, m) = pe.scores[i];
      }
      data.y_train = train.labels();
      data.y_valid = valid.labels();
      data.y_test = test.labels();
      const ModelKind kind = parse_model_kind(perm_kind);
      TrainConfig tc;
      tc.seed = derive_seed(perm_seed, 7);
      TrainEvalFn fn = [kind, tc](const Matrix& xt, const std::vector<int>& yt,
                                  const Matrix& xv, const std::vector<int>& yv,
                                  const Matrix& xe) {
        return Model::train(kind, xt, yt, xv, yv, tc).predict(xe);
      };
      const MetricReport report = permutation_baseline(
          fn, data, perm_threshold, perm_boot, perm_seed, !perm_identity);
      StrategyReports reports{{"permutation", report}};
      if (!perm_out.empty())
        write_report_files(perm_out, [&](TableFormat f) {
          return write_metric_table(reports, f);
        });
      if (perm_json)
        std::cout << json({{"name", "permutation"},
                           {"metrics", report_to_json(report)}})
                         .dump()
                  << "\n";
      else
        std::cout << metric_table_markdown(reports);
      return 0;
    }

    if (*cmd_synth) {
      SynthConfig cfg;
      if (!synth_config.empty())
        cfg = parse_synth_config(read_file(synth_config));
      if (*synth_seed_opt) cfg.seed = synth_seed_value;
      const fs::path dir(synth_out_dir);
      fs::create_directories(dir);
      write_synth_site(cfg, dir, "");

      std::string data_b_section;
      if (synth_site_b) {
        SynthConfig cfg_b = cfg;
        cfg_b.site = cfg.site == "siteB" ? "siteB2" : "siteB";
        cfg_b.seed = derive_seed(cfg.seed, 0xB);
        write_synth_site(cfg_b, dir, "_b");
        data_b_section =
            "\n[data_b]\n"
            "diagnoses = diagnoses_b.csv\n"
            "demographics = demographics_b.csv\n"
            "features = features_b.csv\n";
      }

      std::string preds_list;
      for (std::size_t m = 0; m < cfg.model_ids.size(); ++m) {
        if (m > 0) preds_list += ", ";
        preds_list += cfg.model_ids[m] + "=preds_" + cfg.model_ids[m] + ".csv";
      }
      std::string strategies =
          "bag:unweighted, bag:weighted, stack:logistic, stack:knn, "
          "stack:forest, stack:gbdt, data:multimodal";
      if (synth_site_b) strategies += ", data:multisite";
      strategies += ", permutation";
      const std::string run_cfg =
          "[data]\n"
          "diagnoses = diagnoses.csv\n"
          "demographics = demographics.csv\n"
          "features = features.csv\n"
          "predictions = " + preds_list + "\n" + data_b_section +
          "\n[split]\n"
          "ratios = 0.64,0.16,0.20\n"
          "\n[eval]\n"
          "threshold = 0.5\n"
          "bootstrap = 1000\n"
          "\n[fusion]\n"
          "strategies = " + strategies + "\n"
          "\n[fairness]\n"
          "axes = race_ethnicity,sex,age\n"
          "\n[run]\n"
          "seed = " + std::to_string(cfg.seed) + "\n"
          "out_dir = out\n";
      write_file((dir / "run.cfg").string(), run_cfg);
      std::cout << "synthetic dataset written to " << synth_out_dir
                << " (run config: run.cfg)\n";
      return 0;
    }

    if (*cmd_report) {
      const fs::path in(report_in);
      const TableFormat format = parse_table_format(report_format);
      const StrategyReports reports = reports_from_json(
          json::parse(read_file((in / "metrics.json").string())));
      const FairnessTable fairness = fairness_from_json(
          json::parse(read_file((in / "fairness.json").string())));
      std::string text = write_metric_table(reports, format);
      if (format == TableFormat::Markdown) text += "\n";
      text += write_fairness_table(fairness, format);
      if (report_out.empty())
        std::cout << text;
      else
        write_file(report_out, text);
      return 0;
    }

    if (*cmd_run) {
      const PipelineConfig cfg = PipelineConfig::from_file(run_config);
      const ReportBundle bundle = run_pipeline(cfg);
      print_warnings(bundle.warnings);
      if (run_json) {
        std::cout << bundle.run_meta_json;
      } else {
        StrategyReports reports;
        for (const auto& row : bundle.rows)
          reports.emplace_back(row.name, row.report);
        std::cout << metric_table_markdown(reports) << "\n"
                  << fairness_table_markdown(bundle.fairness);
        if (!cfg.out_dir.empty())
          std::cout << "\nreports written to " << cfg.out_dir << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
