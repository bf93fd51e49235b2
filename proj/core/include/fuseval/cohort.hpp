#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fuseval/csv.hpp"
#include "fuseval/types.hpp"

namespace fuseval {

// Per ICD version, the code prefixes that identify the positive class.
// Matching ignores dots, so `J44.9` and `J449` are the same code.
struct LabelMap {
  std::map<int, std::vector<std::string>> prefixes;
};

// Editable stand-in defaults; the published appendix list is not in the
// paper body, so this ships as operator-overridable config.
LabelMap default_label_map();

// Config format: one entry per line, `icd10 J44` / `icd9 491`.
// `#` starts a comment.
LabelMap parse_label_map(std::string_view text);
std::string write_label_map(const LabelMap& map);

LabeledCohort assign_labels(const std::vector<DiagnosisRecord>& diagnoses,
                            const LabelMap& map);

// Keeps exactly the rows whose ventilation flag is 0, in order. The flag
// comes from the diagnosis table; a cohort image without a flag is an
// error.
LabeledCohort exclude_ventilated(const LabeledCohort& cohort,
                                 const std::vector<DiagnosisRecord>& diagnoses,
                                 Warnings* warnings = nullptr);

struct SplitRatios {
  double train = 0.64;
  double valid = 0.16;
  double test = 0.20;
};

struct SplitAssignment {
  std::map<std::string, Split> by_patient;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  Split of(const std::string& patient_id) const;
};

// Patient-level split: distinct patient ids are sorted lexicographically,
// shuffled with the seeded generator, and cut at floor(r_train*n) and
// floor((r_train+r_valid)*n); the remainder is the test set. All images of
// a patient inherit the patient's split, so splits can never leak.
SplitAssignment split_by_patient(const LabeledCohort& cohort,
                                 const SplitRatios& ratios,
                                 std::uint64_t seed);

// Loss multipliers inverse to class frequency:
//   w_pos = N / (2 * N_pos),  w_neg = N / (2 * N_neg)
struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

ClassWeights class_weights(const LabeledCohort& cohort);
ClassWeights class_weights_from_labels(const std::vector<int>& labels);

// Cohort restricted to one split, original row order preserved.
LabeledCohort cohort_split(const LabeledCohort& cohort,
                           const SplitAssignment& assignment, Split which);

}  // namespace fuseval
