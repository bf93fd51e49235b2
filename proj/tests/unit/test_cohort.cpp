#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "fuseval/cohort.hpp"
#include "fuseval/error.hpp"
#include "fuseval/rng.hpp"
#include "oracles.hpp"

using namespace fuseval;

namespace {

DiagnosisRecord diag(std::string patient, std::string image,
                     std::vector<IcdCode> codes, bool vent = false) {
  DiagnosisRecord d;
  d.patient_id = std::move(patient);
  d.image_id = std::move(image);
  d.codes = std::move(codes);
  d.ventilated = vent;
  d.site = "s";
  return d;
}

LabeledCohort cohort_of_patients(std::size_t n_patients,
                                 std::size_t images_each) {
  LabeledCohort cohort;
  for (std::size_t p = 0; p < n_patients; ++p)
    for (std::size_t i = 0; i < images_each; ++i)
      cohort.rows.push_back({"p" + std::to_string(p),
                             "p" + std::to_string(p) + "_i" + std::to_string(i),
                             static_cast<int>(p % 2), "s"});
  return cohort;
}

}  // namespace

TEST_CASE("assign_labels matches prefixes, ignoring dots") {
  const LabelMap map = default_label_map();
  auto cohort = assign_labels({diag("p1", "i1", {{10, "J44.9"}}),
                               diag("p2", "i2", {}),
                               diag("p3", "i3", {{9, "4919"}}),
                               diag("p4", "i4", {{10, "I10"}})},
                              map);
  CHECK(cohort.rows[0].label == 1);
  CHECK(cohort.rows[1].label == 0);  // empty code list
  CHECK(cohort.rows[2].label == 1);
  CHECK(cohort.rows[3].label == 0);
}

TEST_CASE("assign_labels is idempotent and order-independent over codes") {
  const LabelMap map = default_label_map();
  std::vector<IcdCode> codes = {{10, "I10"}, {10, "J43.1"}, {9, "250"}};
  auto once = assign_labels({diag("p", "i", codes)}, map);
  std::reverse(codes.begin(), codes.end());
  auto reversed = assign_labels({diag("p", "i", codes)}, map);
  CHECK(once.rows[0].label == 1);
  CHECK(once.rows[0].label == reversed.rows[0].label);
  auto again = assign_labels({diag("p", "i", codes)}, map);
  CHECK(again.rows[0].label == reversed.rows[0].label);
}

TEST_CASE("assign_labels rejects unknown ICD versions") {
  CHECK_THROWS_AS(
      assign_labels({diag("p", "i", {{8, "123"}})}, default_label_map()),
      Error);
}

TEST_CASE("exclude_ventilated keeps order and warns when empty") {
  auto diagnoses = std::vector<DiagnosisRecord>{
      diag("p1", "i1", {}, false), diag("p2", "i2", {}, true),
      diag("p3", "i3", {}, false)};
  const LabeledCohort cohort = assign_labels(diagnoses, default_label_map());

  const LabeledCohort kept = exclude_ventilated(cohort, diagnoses);
  REQUIRE(kept.size() == 2);
  CHECK(kept.rows[0].image_id == "i1");
  CHECK(kept.rows[1].image_id == "i3");

  for (auto& d : diagnoses) d.ventilated = false;
  CHECK(exclude_ventilated(cohort, diagnoses).size() == 3);

  for (auto& d : diagnoses) d.ventilated = true;
  Warnings warnings;
  CHECK(exclude_ventilated(cohort, diagnoses, &warnings).size() == 0);
  CHECK(warnings.messages.size() == 1);

  diagnoses.pop_back();
  CHECK_THROWS_AS(exclude_ventilated(cohort, diagnoses), Error);
}

TEST_CASE("split cuts 10 patients into 6/2/2") {
  const LabeledCohort cohort = cohort_of_patients(10, 1);
  const SplitAssignment a = split_by_patient(cohort, {}, 42);
  std::size_t train = 0, valid = 0, test = 0;
  for (const auto& [p, s] : a.by_patient) {
    if (s == Split::Train) ++train;
    if (s == Split::Valid) ++valid;
    if (s == Split::Test) ++test;
  }
  CHECK(train == 6);
  CHECK(valid == 2);
  CHECK(test == 2);
}

TEST_CASE("all images of a patient inherit one split") {
  const LabeledCohort cohort = cohort_of_patients(8, 5);
  const SplitAssignment a = split_by_patient(cohort, {}, 1);
  for (const auto& row : cohort.rows)
    CHECK(a.of(row.patient_id) == a.of(row.patient_id + ""));
  const LabeledCohort train = cohort_split(cohort, a, Split::Train);
  std::set<std::string> train_patients;
  for (const auto& r : train.rows) train_patients.insert(r.patient_id);
  for (const auto& p : train_patients) CHECK(a.of(p) == Split::Train);
}

TEST_CASE("split is deterministic in the seed and input order") {
  LabeledCohort cohort = cohort_of_patients(30, 2);
  const SplitAssignment a = split_by_patient(cohort, {}, 99);
  const SplitAssignment b = split_by_patient(cohort, {}, 99);
  CHECK(a.by_patient == b.by_patient);
  // Same patients presented in reverse row order split identically.
  std::reverse(cohort.rows.begin(), cohort.rows.end());
  const SplitAssignment c = split_by_patient(cohort, {}, 99);
  CHECK(a.by_patient == c.by_patient);
  const SplitAssignment d = split_by_patient(cohort, {}, 100);
  CHECK(a.by_patient != d.by_patient);
}

TEST_CASE("split partitions patients and images disjointly") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 3 + rng.below(60);
    const LabeledCohort cohort =
        cohort_of_patients(n, 1 + rng.below(4));
    const SplitAssignment a = split_by_patient(cohort, {}, rng.next_u64());

    std::set<std::string> train_p, valid_p, test_p;
    for (const auto& [p, s] : a.by_patient) {
      if (s == Split::Train) train_p.insert(p);
      if (s == Split::Valid) valid_p.insert(p);
      if (s == Split::Test) test_p.insert(p);
    }
    CHECK(train_p.size() + valid_p.size() + test_p.size() == n);
    const std::size_t cut_train = static_cast<std::size_t>(0.64 * n);
    const std::size_t cut_valid = static_cast<std::size_t>(0.80 * n);
    CHECK(train_p.size() == cut_train);
    CHECK(valid_p.size() == cut_valid - cut_train);

    std::set<std::string> train_i, other_i;
    for (const auto& row : cohort.rows) {
      if (a.of(row.patient_id) == Split::Train)
        train_i.insert(row.image_id);
      else
        other_i.insert(row.image_id);
    }
    for (const auto& id : train_i) CHECK(other_i.count(id) == 0);
  }
}

TEST_CASE("split rejects tiny cohorts and bad ratios") {
  const LabeledCohort tiny = cohort_of_patients(2, 1);
  CHECK_THROWS_AS(split_by_patient(tiny, {}, 0), Error);
  const LabeledCohort ok = cohort_of_patients(5, 1);
  CHECK_THROWS_AS(split_by_patient(ok, {0.5, 0.2, 0.2}, 0), Error);
  CHECK_THROWS_AS(split_by_patient(ok, {0.8, -0.1, 0.3}, 0), Error);
}

TEST_CASE("class weights reproduce the formula") {
  const LabeledCohort balanced = cohort_of_patients(10, 1);  // 5/5
  const ClassWeights w = class_weights(balanced);
  CHECK(w.positive == doctest::Approx(1.0));
  CHECK(w.negative == doctest::Approx(1.0));

  // N=100 with 25 positives -> (2.0, 0.6667).
  LabeledCohort skewed;
  for (int i = 0; i < 100; ++i)
    skewed.rows.push_back({"p" + std::to_string(i), "i" + std::to_string(i),
                           i < 25 ? 1 : 0, "s"});
  const ClassWeights w2 = class_weights(skewed);
  CHECK(w2.positive == doctest::Approx(2.0));
  CHECK(w2.negative == doctest::Approx(0.6667).epsilon(1e-4));
}

TEST_CASE("published training weights come out at prevalence 0.2618") {
  // 2618 positives in 10000 rounds to the published pair (1.91, 0.68).
  LabeledCohort cohort;
  for (int i = 0; i < 10000; ++i)
    cohort.rows.push_back({"p" + std::to_string(i), "i" + std::to_string(i),
                           i < 2618 ? 1 : 0, "s"});
  const ClassWeights w = class_weights(cohort);
  CHECK(std::nearbyint(w.positive * 100) / 100 == doctest::Approx(1.91));
  CHECK(std::nearbyint(w.negative * 100) / 100 == doctest::Approx(0.68));
}

TEST_CASE("class weight identity holds on random cohorts") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(500);
    LabeledCohort cohort;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = rng.bernoulli(0.3) ? 1 : 0;
      n_pos += label;
      cohort.rows.push_back({"p" + std::to_string(i), "i" + std::to_string(i),
                             label, "s"});
    }
    if (n_pos == 0 || n_pos == n) continue;
    const ClassWeights w = class_weights(cohort);
    const double identity = static_cast<double>(n_pos) * w.positive +
                            static_cast<double>(n - n_pos) * w.negative;
    CHECK(identity == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("single-class cohort has undefined weights") {
  LabeledCohort cohort;
  for (int i = 0; i < 5; ++i)
    cohort.rows.push_back({"p", "i" + std::to_string(i), 1, "s"});
  try {
    class_weights(cohort);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Computation);
    CHECK(std::string(e.what()).find("undefined class weight") !=
          std::string::npos);
  }
}
