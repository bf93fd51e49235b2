#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "fuseval/csv.hpp"
#include "fuseval/error.hpp"
#include "fuseval/pipeline.hpp"
#include "fuseval/synth.hpp"

using namespace fuseval;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("fuseval_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Writes a small synthetic dataset plus pipeline config, returns the config
// text (paths resolve relative to dir).
std::string write_dataset(const fs::path& dir, std::uint64_t seed,
                          bool with_site_b) {
  SynthConfig cfg;
  cfg.n_patients = 160;
  cfg.images_per_patient_min = 1;
  cfg.images_per_patient_max = 2;
  cfg.prevalence = 0.35;
  cfg.ventilated_fraction = 0.05;
  cfg.seed = seed;
  cfg.site = "siteA";
  const SynthDataset data = generate_cohort(cfg);
  write_file((dir / "diagnoses.csv").string(), write_diagnoses_csv(data.diagnoses));
  write_file((dir / "demographics.csv").string(),
             write_demographics_csv(data.demographics));
  write_file((dir / "features.csv").string(),
             write_features_csv(generate_features(data, cfg)));
  std::string preds_list;
  for (const auto& p : generate_base_predictions(data, cfg)) {
    write_file((dir / ("preds_" + p.model_id + ".csv")).string(),
               write_predictions_csv(p));
    if (!preds_list.empty()) preds_list += ", ";
    preds_list += p.model_id + "=preds_" + p.model_id + ".csv";
  }

  std::string data_b;
  if (with_site_b) {
    SynthConfig cfg_b = cfg;
    cfg_b.site = "siteB";
    cfg_b.seed = seed + 1;
    cfg_b.n_patients = 120;
    const SynthDataset b = generate_cohort(cfg_b);
    write_file((dir / "diagnoses_b.csv").string(),
               write_diagnoses_csv(b.diagnoses));
    write_file((dir / "demographics_b.csv").string(),
               write_demographics_csv(b.demographics));
    write_file((dir / "features_b.csv").string(),
               write_features_csv(generate_features(b, cfg_b)));
    data_b =
        "[data_b]\n"
        "diagnoses = diagnoses_b.csv\n"
        "demographics = demographics_b.csv\n"
        "features = features_b.csv\n";
  }

  std::string strategies =
      "bag:unweighted, bag:weighted, stack:logistic, stack:gbdt, "
      "data:multimodal";
  if (with_site_b) strategies += ", data:multisite";
  strategies += ", permutation";

  return "[data]\n"
         "diagnoses = diagnoses.csv\n"
         "demographics = demographics.csv\n"
         "features = features.csv\n"
         "predictions = " + preds_list + "\n" + data_b +
         "[eval]\n"
         "bootstrap = 60\n"
         "[train]\n"
         "max_epochs = 12\n"
         "forest_trees = 15\n"
         "gbdt_rounds = 15\n"
         "[fusion]\n"
         "strategies = " + strategies + "\n"
         "[run]\n"
         "seed = 4242\n"
         "out_dir = out\n";
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST_CASE("end-to-end run produces the full bundle") {
  TempDir tmp("e2e");
  const std::string cfg_text = write_dataset(tmp.path, 7, /*with_site_b=*/true);
  write_file((tmp.path / "run.cfg").string(), cfg_text);

  const PipelineConfig cfg =
      PipelineConfig::from_file((tmp.path / "run.cfg").string());
  const ReportBundle bundle = run_pipeline(cfg);

  // 4 base rows + 5 strategies + multisite + permutation.
  REQUIRE(bundle.rows.size() == 11);
  CHECK(bundle.rows[0].name == "base:sim_a");
  CHECK(bundle.rows[3].name == "base:sim_d");
  CHECK(bundle.rows[4].name == "bag:unweighted");
  CHECK(bundle.rows.back().name == "permutation");

  // Three-axis fairness table over every non-permutation row.
  CHECK(bundle.fairness.axes.size() == 3);
  CHECK(bundle.fairness.strategies.size() == 10);

  // Outputs on disk.
  for (const char* name :
       {"metrics.csv", "metrics.json", "metrics.md", "fairness.csv",
        "fairness.json", "fairness.md", "run_meta.json", "dendrogram.json"})
    CHECK(fs::exists(tmp.path / "out" / name));
  CHECK(fs::exists(tmp.path / "out" / "predictions" / "bag_weighted.csv"));

  // The strong simulated models beat chance comfortably at test time.
  CHECK(bundle.row("bag:unweighted").report.of(MetricId::Auc).full_sample > 0.7);
}

TEST_CASE("rerunning an identical config is byte-identical") {
  TempDir tmp("determinism");
  const std::string cfg_text = write_dataset(tmp.path, 9, /*with_site_b=*/false);
  write_file((tmp.path / "run.cfg").string(), cfg_text);
  const PipelineConfig cfg =
      PipelineConfig::from_file((tmp.path / "run.cfg").string());

  run_pipeline(cfg);
  std::map<std::string, std::string> first;
  for (const char* name : {"metrics.csv", "metrics.json", "fairness.csv",
                           "fairness.json", "run_meta.json"})
    first[name] = slurp(tmp.path / "out" / name);

  run_pipeline(cfg);
  for (const auto& [name, bytes] : first)
    CHECK(slurp(tmp.path / "out" / name) == bytes);
}

TEST_CASE("zero strategies is a usage error") {
  TempDir tmp("usage");
  std::string cfg_text = write_dataset(tmp.path, 3, false);
  const auto pos = cfg_text.find("strategies =");
  cfg_text.erase(pos, cfg_text.find('\n', pos) - pos);
  write_file((tmp.path / "run.cfg").string(), cfg_text);
  const PipelineConfig cfg =
      PipelineConfig::from_file((tmp.path / "run.cfg").string());
  try {
    run_pipeline(cfg);
    FAIL("expected usage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
    CHECK(e.exit_code() == 1);
  }
}

TEST_CASE("strategy parsing accepts the fixed naming scheme") {
  CHECK(parse_strategy("base:m1").name() == "base:m1");
  CHECK(parse_strategy("bag:unweighted").name() == "bag:unweighted");
  CHECK(parse_strategy("stack:forest").name() == "stack:forest");
  CHECK(parse_strategy("data:multimodal").name() == "data:multimodal");
  CHECK(parse_strategy("permutation").name() == "permutation");
  CHECK_THROWS_AS(parse_strategy("stack:xgboost2"), Error);
  CHECK_THROWS_AS(parse_strategy("bagging"), Error);
}

TEST_CASE("FUSEVAL_SEED overrides only the master seed") {
  ::setenv("FUSEVAL_SEED", "777", 1);
  const PipelineConfig cfg = PipelineConfig::from_text(
      "[run]\nseed = 1\n[eval]\nbootstrap = 5\n", "");
  ::unsetenv("FUSEVAL_SEED");
  CHECK(cfg.master_seed == 777);
  CHECK(cfg.bootstrap == 5);
}

#ifdef FUSEVAL_BIN
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FUSEVAL_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: run executes and exit codes follow the error taxonomy") {
  TempDir tmp("cli");
  const std::string cfg_text = write_dataset(tmp.path, 21, false);
  write_file((tmp.path / "run.cfg").string(), cfg_text);

  CHECK(run_cli("run --config " + (tmp.path / "run.cfg").string() + " --json") == 0);
  CHECK(fs::exists(tmp.path / "out" / "metrics.md"));

  // Usage error: unknown strategy.
  std::string bad = cfg_text;
  const auto pos = bad.find("strategies =");
  bad.replace(pos, bad.find('\n', pos) - pos, "strategies = bogus");
  write_file((tmp.path / "bad.cfg").string(), bad);
  CHECK(run_cli("run --config " + (tmp.path / "bad.cfg").string()) == 1);

  // Data error: file missing.
  std::string gone = cfg_text;
  const auto dpos = gone.find("diagnoses.csv");
  gone.replace(dpos, std::string("diagnoses.csv").size(), "missing.csv");
  write_file((tmp.path / "gone.cfg").string(), gone);
  CHECK(run_cli("run --config " + (tmp.path / "gone.cfg").string()) == 2);
}

TEST_CASE("cli: label, split, weights, eval, fairness, chisq round trip") {
  TempDir tmp("cli2");
  write_dataset(tmp.path, 33, false);
  const std::string dir = tmp.path.string() + "/";

  CHECK(run_cli("label --diagnoses " + dir + "diagnoses.csv --out " + dir +
                "cohort.csv") == 0);
  CHECK(run_cli("split --labels " + dir + "cohort.csv --seed 5 --out " + dir +
                "splits.csv") == 0);
  CHECK(run_cli("weights --labels " + dir + "cohort.csv --json") == 0);
  CHECK(run_cli("eval --preds " + dir + "preds_sim_d.csv --labels " + dir +
                "cohort.csv --boot 30 --out " + dir + "report") == 0);
  CHECK(fs::exists(tmp.path / "report.md"));
  CHECK(fs::exists(tmp.path / "report.json"));
  CHECK(run_cli("fairness --preds " + dir + "preds_sim_d.csv --labels " + dir +
                "cohort.csv --demo " + dir + "demographics.csv --out " + dir +
                "fair.csv") == 0);
  CHECK(fs::exists(tmp.path / "fair.csv"));

  write_file(dir + "table.csv", "20,10\n10,20\n");
  CHECK(run_cli("chisq --table " + dir + "table.csv --json") == 0);

  CHECK(run_cli("fuse --strategy unweighted --preds " + dir +
                "preds_sim_a.csv," + dir + "preds_sim_b.csv --out " + dir +
                "fused.csv") == 0);
  CHECK(fs::exists(tmp.path / "fused.csv"));

  // report re-render needs a prior run
  write_file(dir + "run.cfg", write_dataset(tmp.path, 33, false));
  CHECK(run_cli("run --config " + dir + "run.cfg --json") == 0);
  CHECK(run_cli("report --in " + dir + "out --format csv --out " + dir +
                "summary.csv") == 0);
  CHECK(fs::exists(tmp.path / "summary.csv"));
}
#endif
