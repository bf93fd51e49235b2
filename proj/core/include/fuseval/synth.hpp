#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuseval/fairness.hpp"
#include "fuseval/types.hpp"

namespace fuseval {

// Additive skill adjustment for every image whose patient falls in `group`
// of `axis`; lets tests inject controlled per-subgroup performance gaps.
struct GroupSkillOffset {
  Axis axis = Axis::RaceEthnicity;
  std::string group;
  double offset = 0.0;
};

struct CategoricalProportions {
  std::vector<std::string> labels;
  std::vector<double> shares;  // sums to 1
};

// Defaults for the demographic mix follow the MIMIC column of the summary
// table (race 3.7/16.9/6.3/8.9/64.2, sex 52/48, age 15.6/31.1/36.9/16.4,
// in percent).
struct SynthConfig {
  std::size_t n_patients = 500;
  std::size_t images_per_patient_min = 1;
  std::size_t images_per_patient_max = 3;
  double prevalence = 0.3;

  std::vector<std::string> model_ids = {"sim_a", "sim_b", "sim_c", "sim_d"};
  std::vector<double> model_skills = {1.0, 1.2, 1.5, 2.0};
  double shared_noise_weight = 0.5;  // rho, inter-model correlation knob

  CategoricalProportions race;
  CategoricalProportions sex;
  CategoricalProportions age;  // shares over the four age bins

  std::vector<GroupSkillOffset> group_skill_offsets;

  double feature_skill = 1.5;
  double ventilated_fraction = 0.0;
  std::string site = "siteA";
  std::uint64_t seed = 0;

  SynthConfig();
};

void validate(const SynthConfig& cfg);

struct SynthDataset {
  LabeledCohort cohort;
  std::vector<DemographicRecord> demographics;
  std::vector<DiagnosisRecord> diagnoses;
};

// Cohort generation is per-patient deterministic: patient p draws from its
// own derived stream, so output is independent of generation order.
// Diagnosis codes are emitted consistently with the labels, so
// assign_labels on the default label map round-trips exactly.
SynthDataset generate_cohort(const SynthConfig& cfg);

// Correlated base-model scores:
//   score_m = sigmoid(a_m * ((2y-1) + rho * g_shared) + noise_m)
// with g_shared, noise_m standard normal per image. Larger skill a_m means
// higher expected AUC; rho correlates the models.
std::vector<PredictionSet> generate_base_predictions(const SynthDataset& data,
                                                     const SynthConfig& cfg);

// 64-component vectors: component 0 carries feature_skill * (2y-1) plus
// noise, the rest are pure noise.
std::vector<FeatureRow> generate_features(const SynthDataset& data,
                                          const SynthConfig& cfg);

// `[synth]` section of the plain-text config format.
SynthConfig parse_synth_config(const std::string& text);

}  // namespace fuseval
