// Acceptance suite: every release criterion in one binary, one PASS/FAIL
// line per criterion. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fuseval/cohort.hpp"
#include "fuseval/csv.hpp"
#include "fuseval/error.hpp"
#include "fuseval/fairness.hpp"
#include "fuseval/fusion.hpp"
#include "fuseval/learners.hpp"
#include "fuseval/metrics.hpp"
#include "fuseval/pipeline.hpp"
#include "fuseval/rng.hpp"
#include "fuseval/stats.hpp"
#include "fuseval/synth.hpp"
#include "oracles.hpp"

using namespace fuseval;
namespace fs = std::filesystem;

namespace {

int failures = 0;
int criterion_no = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

void run_criterion(const std::string& name, double budget_seconds,
                   const std::function<void(Check&)>& body) {
  ++criterion_no;
  Check check;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(check);
  } catch (const std::exception& e) {
    check.expect(false, std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (budget_seconds > 0)
    check.expect(secs < budget_seconds,
                 "runtime " + std::to_string(secs) + "s over budget");
  std::printf("[%2d/13] %-52s %s (%.2fs)\n", criterion_no, name.c_str(),
              check.ok ? "PASS" : "FAIL", secs);
  if (!check.ok) {
    std::printf("        -> %s\n", check.detail.c_str());
    ++failures;
  }
  std::fflush(stdout);
}

// ---- criterion 1 -----------------------------------------------------

void auc_oracle_equivalence(Check& check) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto data =
        testing::random_scored_labels(seed, 2 + seed % 199, seed % 2 == 0);
    const double fast = roc_auc(data);
    const double slow = testing::auc_bruteforce(data.scores, data.labels);
    check.expect(std::abs(fast - slow) < 1e-12,
                 "instance " + std::to_string(seed) + ": " +
                     std::to_string(fast) + " vs " + std::to_string(slow));
    if (!check.ok) return;
  }
}

// ---- criterion 2 -----------------------------------------------------

void upgma_oracle_equivalence(Check& check) {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(6);  // <= 7 leaves
    DistanceMatrix d;
    for (std::size_t i = 0; i < n; ++i) d.ids.push_back("m" + std::to_string(i));
    d.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = rng.below(10) / 5.0;  // quantized: ties happen
        d.values[i * n + j] = v;
        d.values[j * n + i] = v;
      }
    const auto fast = testing::merge_trace(upgma_linkage(d));
    const auto slow = testing::upgma_bruteforce(d);
    check.expect(fast.size() == slow.size(), "merge count differs");
    for (std::size_t i = 0; check.ok && i < fast.size(); ++i) {
      check.expect(fast[i].left == slow[i].left &&
                       fast[i].right == slow[i].right,
                   "trial " + std::to_string(trial) + ": merge " +
                       std::to_string(i) + " differs");
      check.expect(std::abs(fast[i].height - slow[i].height) < 1e-9,
                   "trial " + std::to_string(trial) + ": height differs");
    }
    if (!check.ok) return;
  }
}

// ---- criterion 3 -----------------------------------------------------

DistanceMatrix matrix_of(std::vector<std::string> ids,
                         std::vector<double> upper) {
  DistanceMatrix d;
  d.ids = std::move(ids);
  const std::size_t n = d.ids.size();
  d.values.assign(n * n, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      d.values[i * n + j] = upper[k];
      d.values[j * n + i] = upper[k];
      ++k;
    }
  return d;
}

void dendrogram_weight_reproduction(Check& check) {
  // Caterpillar merge order: (a,b) then +c then +d.
  const DistanceMatrix caterpillar = matrix_of(
      {"densenet", "resnet", "mobilenet", "xception"},
      {0.1, 0.4, 0.8, 0.4, 0.8, 0.8});
  const WeightVector w = dendrogram_weights(upgma_linkage(caterpillar));
  check.expect(w.at("densenet") == 0.125 && w.at("resnet") == 0.125,
               "deep leaves not 1/8");
  check.expect(w.at("mobilenet") == 0.25, "middle leaf not 1/4");
  check.expect(w.at("xception") == 0.5, "last-merged leaf not 1/2");

  const DistanceMatrix balanced =
      matrix_of({"a", "b", "c", "d"}, {0.1, 0.9, 0.9, 0.9, 0.9, 0.1});
  for (const auto& [id, weight] : dendrogram_weights(upgma_linkage(balanced)))
    check.expect(weight == 0.25, "balanced leaf " + id + " not 1/4");

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    DistanceMatrix d;
    for (std::size_t i = 0; i < n; ++i) d.ids.push_back("m" + std::to_string(i));
    d.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = 0.05 + rng.uniform01();
        d.values[i * n + j] = v;
        d.values[j * n + i] = v;
      }
    double total = 0.0;
    for (const auto& [id, weight] : dendrogram_weights(upgma_linkage(d)))
      total += weight;
    check.expect(std::abs(total - 1.0) <= 1e-12, "weights do not sum to 1");
    if (!check.ok) return;
  }
}

// ---- criterion 4 -----------------------------------------------------

LabeledCohort cohort_with(std::size_t n, std::size_t n_pos) {
  LabeledCohort cohort;
  for (std::size_t i = 0; i < n; ++i)
    cohort.rows.push_back({"p" + std::to_string(i), "i" + std::to_string(i),
                           i < n_pos ? 1 : 0, "s"});
  return cohort;
}

void class_weight_reproduction(Check& check) {
  const ClassWeights quarter = class_weights(cohort_with(100, 25));
  check.expect(quarter.positive == 2.0, "w_pos at prevalence 0.25");
  check.expect(std::abs(quarter.negative - 2.0 / 3.0) < 5e-5,
               "w_neg at prevalence 0.25");

  const ClassWeights published = class_weights(cohort_with(10000, 2618));
  check.expect(std::nearbyint(published.positive * 100) / 100 == 1.91,
               "published w_pos");
  check.expect(std::nearbyint(published.negative * 100) / 100 == 0.68,
               "published w_neg");

  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(2000);
    const std::size_t n_pos = 1 + rng.below(n - 1);
    const ClassWeights w = class_weights(cohort_with(n, n_pos));
    const double identity = static_cast<double>(n_pos) * w.positive +
                            static_cast<double>(n - n_pos) * w.negative;
    check.expect(std::abs(identity - static_cast<double>(n)) <
                     1e-9 * static_cast<double>(n),
                 "identity failed at n=" + std::to_string(n));
    if (!check.ok) return;
  }
}

// ---- criterion 5 -----------------------------------------------------

void star_placement_reproduction(Check& check) {
  struct Table {
    const char* tag;
    std::vector<std::array<double, 3>> sds;       // race, sex, age
    std::vector<std::array<bool, 3>> stars;
  };
  // Strategy order: base model, unweighted bagging, weighted bagging,
  // random-forest stacking, multi-site, multi-modal.
  const Table internal{
      "internal",
      {{0.026, 0.010, 0.036},
       {0.031, 0.010, 0.030},
       {0.029, 0.010, 0.032},
       {0.030, 0.015, 0.029},
       {0.025, 0.005, 0.046},
       {0.032, 0.010, 0.035}},
      {{false, false, false},
       {false, false, false},
       {false, false, false},
       {false, true, false},
       {false, false, true},
       {true, false, false}}};
  const Table external{
      "external",
      {{0.024, 0.000, 0.030},
       {0.038, 0.005, 0.025},
       {0.030, 0.000, 0.027},
       {0.038, 0.005, 0.029},
       {0.050, 0.000, 0.031},
       {0.038, 0.000, 0.026}},
      {{false, false, false},
       {false, true, false},
       {false, false, false},
       {false, true, false},
       {true, false, true},
       {false, false, false}}};

  for (const Table& table : {internal, external}) {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      std::vector<double> column;
      for (const auto& row : table.sds) column.push_back(row[axis]);
      const auto flags = star_flag(column);
      for (std::size_t s = 0; s < flags.size(); ++s)
        check.expect(flags[s] == table.stars[s][axis],
                     std::string(table.tag) + " table, strategy " +
                         std::to_string(s) + ", axis " + std::to_string(axis));
      // Base model (row 0) and weighted bagging (row 2) never starred.
      check.expect(!flags[0] && !flags[2],
                   std::string(table.tag) + " narrative: unstarred rows");
    }
  }
  // The external sex column is the published two-way tie.
  const auto tie = star_flag(std::vector<double>{0, .005, 0, .005, 0, 0});
  check.expect(tie == std::vector<bool>{false, true, false, true, false, false},
               "two-way tie not reproduced");
}

// ---- criterion 6 -----------------------------------------------------

SupervisedData stacked_data_from_synth(const SynthConfig& cfg) {
  const SynthDataset data = generate_cohort(cfg);
  const auto preds = generate_base_predictions(data, cfg);
  const SplitAssignment assignment =
      split_by_patient(data.cohort, {}, derive_seed(cfg.seed, 99));

  auto matrix_for = [&](Split which, std::vector<int>& y_out) {
    const LabeledCohort slice = cohort_split(data.cohort, assignment, which);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < data.cohort.size(); ++i)
      index.emplace(data.cohort.rows[i].image_id, i);
    Matrix x(slice.size(), preds.size());
    for (std::size_t r = 0; r < slice.size(); ++r) {
      const std::size_t full_row = index.at(slice.rows[r].image_id);
      for (std::size_t m = 0; m < preds.size(); ++m)
        x.at(r, m) = preds[m].scores[full_row];
    }
    y_out = slice.labels();
    return x;
  };

  SupervisedData out;
  out.x_train = matrix_for(Split::Train, out.y_train);
  out.x_valid = matrix_for(Split::Valid, out.y_valid);
  out.x_test = matrix_for(Split::Test, out.y_test);
  return out;
}

void permutation_null(Check& check) {
  int in_window = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    SynthConfig cfg;
    cfg.n_patients = 10000;  // 20% test split = 2000 evaluation rows
    cfg.images_per_patient_min = cfg.images_per_patient_max = 1;
    cfg.prevalence = 0.3;
    cfg.seed = static_cast<std::uint64_t>(9000 + s);
    const SupervisedData data = stacked_data_from_synth(cfg);

    TrainConfig tc;
    tc.seed = cfg.seed;
    TrainEvalFn pipeline = [&tc](const Matrix& xt, const std::vector<int>& yt,
                                 const Matrix& xv, const std::vector<int>& yv,
                                 const Matrix& xe) {
      return Model::train(ModelKind::Logistic, xt, yt, xv, yv, tc).predict(xe);
    };
    const MetricReport report =
        permutation_baseline(pipeline, data, 0.5, 1000, cfg.seed);
    const double auc = report.of(MetricId::Auc).interval.point;
    if (auc >= 0.45 && auc <= 0.55) ++in_window;
  }
  check.expect(in_window >= 19, "only " + std::to_string(in_window) +
                                    "/20 seeds inside [0.45, 0.55]");
}

// ---- criterion 7 -----------------------------------------------------

void split_integrity(Check& check) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    SynthConfig cfg;
    cfg.n_patients = 3 + rng.below(200);
    cfg.images_per_patient_min = 1;
    cfg.images_per_patient_max = 3;
    cfg.seed = rng.next_u64();
    const SynthDataset data = generate_cohort(cfg);
    const SplitAssignment assignment =
        split_by_patient(data.cohort, {}, rng.next_u64());

    std::set<std::string> train_p, valid_p, test_p;
    for (const auto& [p, s] : assignment.by_patient) {
      if (s == Split::Train) train_p.insert(p);
      else if (s == Split::Valid) valid_p.insert(p);
      else test_p.insert(p);
    }
    const std::size_t n = cfg.n_patients;
    const std::size_t want_train = static_cast<std::size_t>(
        std::floor(0.64 * static_cast<double>(n)));
    const std::size_t want_valid =
        static_cast<std::size_t>(std::floor(0.80 * static_cast<double>(n))) -
        want_train;
    check.expect(train_p.size() + valid_p.size() + test_p.size() == n,
                 "patients not partitioned");
    check.expect(train_p.size() == want_train, "train size");
    check.expect(valid_p.size() == want_valid, "valid size");
    check.expect(test_p.size() == n - want_train - want_valid, "test size");

    std::set<std::string> train_i, valid_i, test_i;
    for (const auto& row : data.cohort.rows) {
      const Split s = assignment.of(row.patient_id);
      auto& bucket = s == Split::Train ? train_i
                     : s == Split::Valid ? valid_i
                                         : test_i;
      bucket.insert(row.image_id);
    }
    check.expect(train_i.size() + valid_i.size() + test_i.size() ==
                     data.cohort.size(),
                 "image leakage across splits");
    if (!check.ok) return;
  }
}

// ---- criterion 8 -----------------------------------------------------

void gradient_check_criterion(Check& check) {
  for (std::uint64_t init = 0; init < 10; ++init) {
    Rng rng(500 + init);
    Matrix x(24, 10);
    std::vector<int> y;
    for (std::size_t i = 0; i < 24; ++i) {
      for (std::size_t j = 0; j < 10; ++j) x.at(i, j) = rng.gaussian();
      y.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    y[0] = 1;
    y[1] = 0;
    TrainConfig cfg;
    cfg.seed = init;
    cfg.max_epochs = 0;  // freshly initialized head
    const Model head = Model::train(ModelKind::MlpHead, x, y, x, y, cfg);
    const double err = gradient_check(head, x, y);
    check.expect(err < 1e-4, "init " + std::to_string(init) +
                                 ": max relative error " + std::to_string(err));
    if (!check.ok) return;
  }
}

// ---- criterion 9 -----------------------------------------------------

void learner_sanity(Check& check) {
  Matrix x_train, x_valid, x_test;
  std::vector<int> y_train, y_valid, y_test;
  testing::separable_dataset(1, 1000, x_train, y_train);
  testing::separable_dataset(2, 300, x_valid, y_valid);
  testing::separable_dataset(3, 500, x_test, y_test);

  for (ModelKind kind :
       {ModelKind::Logistic, ModelKind::RandomForest, ModelKind::Gbdt}) {
    TrainConfig cfg;
    cfg.seed = 11;
    const Model model =
        Model::train(kind, x_train, y_train, x_valid, y_valid, cfg);
    const double auc = roc_auc(model.predict(x_test), y_test);
    check.expect(auc > 0.99, model_kind_name(kind) + " AUC " +
                                 std::to_string(auc));
  }

  // Stacked fusion over four base prediction sets, one informative.
  StackInputs inputs;
  Rng rng(21);
  auto build = [&](std::size_t n, const std::string& prefix,
                   std::vector<int>& labels_out) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back(prefix + std::to_string(i));
      labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<PredictionSet> models;
    for (int m = 0; m < 4; ++m) {
      std::vector<double> scores;
      for (std::size_t i = 0; i < n; ++i)
        scores.push_back(m == 0 ? (labels[i] ? 0.85 + 0.1 * rng.uniform01()
                                             : 0.15 * rng.uniform01())
                                : rng.uniform01());
      models.push_back(testing::make_predictions("m" + std::to_string(m), ids,
                                                 scores));
    }
    labels_out = labels;
    return models;
  };
  inputs.train = build(1000, "tr", inputs.y_train);
  inputs.valid = build(250, "va", inputs.y_valid);
  std::vector<int> stack_y_test;
  inputs.test = build(500, "te", stack_y_test);
  TrainConfig cfg;
  cfg.seed = 31;
  const PredictionSet stacked = stack(ModelKind::Logistic, inputs, cfg);
  check.expect(roc_auc(stacked.scores, stack_y_test) > 0.99, "stacked fusion AUC");

  // gbdt training loss monotone non-increasing over rounds.
  TrainConfig gb;
  gb.seed = 3;
  const Model gbdt =
      Model::train(ModelKind::Gbdt, x_train, y_train, x_valid, y_valid, gb);
  const auto& curve = gbdt.meta().loss_curve;
  check.expect(curve.size() == static_cast<std::size_t>(gb.gbdt_rounds) + 1,
               "gbdt loss curve missing");
  for (std::size_t i = 1; i < curve.size(); ++i)
    check.expect(curve[i] <= curve[i - 1] + 1e-12,
                 "gbdt loss increased at round " + std::to_string(i));
}

// ---- criterion 10 ----------------------------------------------------

void bootstrap_contract(Check& check) {
  // Zero-variance data: CI width exactly 0.
  ScoredLabels degenerate;
  for (int i = 0; i < 200; ++i) {
    degenerate.scores.push_back(i % 2 ? 0.9 : 0.1);
    degenerate.labels.push_back(i % 2);
  }
  const IntervalEstimate zero =
      bootstrap_ci(MetricId::Auc, degenerate, 0.5, 300, 5);
  check.expect(zero.hi - zero.lo == 0.0, "zero-variance CI has width");
  check.expect(zero.point == zero.lo, "zero-variance point off the CI");

  // Serial == parallel under one master seed.
  const auto data = testing::random_scored_labels(2025, 300, true);
  const auto serial = bootstrap_ci(MetricId::Auc, data, 0.5, 400, 9, 1);
  const auto parallel = bootstrap_ci(MetricId::Auc, data, 0.5, 400, 9, 4);
  check.expect(serial.point == parallel.point && serial.lo == parallel.lo &&
                   serial.hi == parallel.hi,
               "serial and parallel CIs differ");

  // CI brackets the full-sample AUC in >= 90% of 50 synthetic runs.
  int bracketed = 0;
  for (int run = 0; run < 50; ++run) {
    SynthConfig cfg;
    cfg.n_patients = 400;
    cfg.images_per_patient_min = cfg.images_per_patient_max = 1;
    cfg.model_ids = {"m"};
    cfg.model_skills = {1.2};
    cfg.seed = static_cast<std::uint64_t>(3000 + run);
    const SynthDataset synth = generate_cohort(cfg);
    const auto preds = generate_base_predictions(synth, cfg);
    ScoredLabels sample{preds[0].scores, synth.cohort.labels()};
    const double full = roc_auc(sample);
    const IntervalEstimate est =
        bootstrap_ci(MetricId::Auc, sample, 0.5, 500, cfg.seed);
    if (est.lo <= full && full <= est.hi) ++bracketed;
  }
  check.expect(bracketed >= 45,
               "CI bracketed the full-sample AUC only " +
                   std::to_string(bracketed) + "/50 times");
}

// ---- criterion 11 ----------------------------------------------------

void fairness_null_and_signal(Check& check) {
  // Duplicated subgroups: SD exactly zero.
  std::vector<std::string> images;
  std::vector<double> scores;
  LabeledCohort cohort;
  std::vector<DemographicRecord> demographics;
  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < 30; ++i) {
      const std::string pid = "p" + std::to_string(g * 1000 + i);
      cohort.rows.push_back({pid, pid + "_i", i % 2, "s"});
      images.push_back(pid + "_i");
      scores.push_back(i % 2 ? 0.5 + 0.01 * i : 0.4 - 0.005 * i);
      demographics.push_back(
          {pid, "White", sex_categories()[static_cast<std::size_t>(g)], 50});
    }
  }
  const auto preds = testing::make_predictions("m", images, scores);
  const AxisSummary duplicated =
      axis_summary(subgroup_metrics(preds, cohort, demographics, Axis::Sex));
  check.expect(duplicated.sd_auc == 0.0, "duplicated subgroups SD not zero");

  // Injected skill gap of 0.2 within the race axis dominates in >= 90%
  // of 20 seeds.
  int wins = 0;
  for (int s = 0; s < 20; ++s) {
    SynthConfig cfg;
    cfg.n_patients = 10000;
    cfg.images_per_patient_min = cfg.images_per_patient_max = 1;
    cfg.model_ids = {"m"};
    cfg.model_skills = {1.0};
    cfg.seed = static_cast<std::uint64_t>(4000 + s);
    cfg.group_skill_offsets = {{Axis::RaceEthnicity, "White", +0.1},
                               {Axis::RaceEthnicity, "Black", -0.1}};
    const SynthDataset data = generate_cohort(cfg);
    const auto biased = generate_base_predictions(data, cfg);

    double race_sd = 0.0, other_max = 0.0;
    for (Axis axis : {Axis::RaceEthnicity, Axis::Sex, Axis::Age}) {
      const AxisSummary summary = axis_summary(
          subgroup_metrics(biased[0], data.cohort, data.demographics, axis));
      if (axis == Axis::RaceEthnicity)
        race_sd = summary.sd_auc;
      else
        other_max = std::max(other_max, summary.sd_auc);
    }
    if (race_sd > other_max) ++wins;
  }
  check.expect(wins >= 18, "affected axis dominated only " +
                               std::to_string(wins) + "/20 seeds");
}

// ---- criterion 12 ----------------------------------------------------

void chi_square_criterion(Check& check) {
  const TestResult uniform =
      chi_square_independence({2, 2, {10, 10, 10, 10}});
  check.expect(uniform.statistic == 0.0 && uniform.p_value == 1.0,
               "uniform table not independent");
  const TestResult uniform23 =
      chi_square_independence({2, 3, {7, 7, 7, 7, 7, 7}});
  check.expect(uniform23.statistic == 0.0 && uniform23.p_value == 1.0,
               "uniform 2x3 table not independent");

  const TestResult crossed =
      chi_square_independence({2, 2, {20, 10, 10, 20}});
  check.expect(std::abs(crossed.statistic - 6.6667) < 1e-4,
               "statistic " + std::to_string(crossed.statistic));
  const double reference =
      testing::chisq_upper_tail_reference(1, crossed.statistic);
  check.expect(std::abs(crossed.p_value - reference) < 1e-4,
               "p " + std::to_string(crossed.p_value) + " vs reference " +
                   std::to_string(reference));
  check.expect(std::abs(crossed.p_value - 0.0098) < 1e-4,
               "p " + std::to_string(crossed.p_value) + " not near 0.0098");
}

// ---- criterion 13 ----------------------------------------------------

void end_to_end_determinism(Check& check) {
  const fs::path tmp =
      fs::temp_directory_path() / "fuseval_acceptance_e2e";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  SynthConfig synth;  // the synthetic defaults
  synth.seed = 20240501;
  const SynthDataset data = generate_cohort(synth);
  write_file((tmp / "diagnoses.csv").string(),
             write_diagnoses_csv(data.diagnoses));
  write_file((tmp / "demographics.csv").string(),
             write_demographics_csv(data.demographics));
  write_file((tmp / "features.csv").string(),
             write_features_csv(generate_features(data, synth)));
  std::string preds_list;
  for (const auto& p : generate_base_predictions(data, synth)) {
    write_file((tmp / ("preds_" + p.model_id + ".csv")).string(),
               write_predictions_csv(p));
    if (!preds_list.empty()) preds_list += ", ";
    preds_list += p.model_id + "=preds_" + p.model_id + ".csv";
  }
  const std::string cfg_text =
      "[data]\n"
      "diagnoses = diagnoses.csv\n"
      "demographics = demographics.csv\n"
      "features = features.csv\n"
      "predictions = " + preds_list + "\n"
      "[eval]\n"
      "bootstrap = 1000\n"
      "[fusion]\n"
      "strategies = bag:unweighted, bag:weighted, stack:logistic, stack:knn, "
      "stack:forest, stack:gbdt, data:multimodal, permutation\n"
      "[run]\n"
      "seed = 99\n"
      "out_dir = out\n";
  write_file((tmp / "run.cfg").string(), cfg_text);

  const PipelineConfig cfg =
      PipelineConfig::from_file((tmp / "run.cfg").string());
  run_pipeline(cfg);
  std::map<std::string, std::string> first;
  for (const char* name : {"metrics.csv", "metrics.json", "fairness.csv",
                           "fairness.json", "run_meta.json"})
    first[name] = read_file((tmp / "out" / name).string());

  run_pipeline(cfg);
  for (const auto& [name, bytes] : first)
    check.expect(read_file((tmp / "out" / name).string()) == bytes,
                 std::string(name) + " differs between identical runs");

  fs::remove_all(tmp);
}

}  // namespace

int main() {
  const auto suite_start = std::chrono::steady_clock::now();
  std::printf("acceptance suite\n----------------\n");

  run_criterion("AUC rank computation vs pairwise oracle", 10.0,
                auc_oracle_equivalence);
  run_criterion("UPGMA linkage vs brute-force agglomeration", 10.0,
                upgma_oracle_equivalence);
  run_criterion("dendrogram weight reproduction (1/8,1/8,1/4,1/2)", 0,
                dendrogram_weight_reproduction);
  run_criterion("class-weight formula reproduction", 0,
                class_weight_reproduction);
  run_criterion("fairness star placement on published tables", 0,
                star_placement_reproduction);
  run_criterion("permutation null within [0.45, 0.55]", 120.0,
                permutation_null);
  run_criterion("patient-level split integrity", 0, split_integrity);
  run_criterion("mlp head gradient check vs finite differences", 0,
                gradient_check_criterion);
  run_criterion("learner sanity on separable data", 0, learner_sanity);
  run_criterion("bootstrap contract (width, parallelism, coverage)", 0,
                bootstrap_contract);
  run_criterion("fairness null and injected-signal detection", 0,
                fairness_null_and_signal);
  run_criterion("chi-square statistic and p-value", 0, chi_square_criterion);
  run_criterion("end-to-end pipeline determinism", 300.0,
                end_to_end_determinism);

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    suite_start)
          .count();
  std::printf("----------------\n%d/13 criteria passed (%.1fs total)\n",
              13 - failures, total);
  return failures;
}
