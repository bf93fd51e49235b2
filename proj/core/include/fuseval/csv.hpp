#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fuseval/types.hpp"

namespace fuseval {

// CSV dialect: comma separators, '\n' line endings (a trailing '\r' is
// tolerated on input), no quoting. Identifiers are restricted to
// [A-Za-z0-9_.-]+ which keeps the schemas bit-exact and quoting-free.
// Every parser either returns a value or throws a structured Error.

enum class Split { Train, Valid, Test };

std::string split_name(Split s);
Split parse_split_name(const std::string& name);

bool valid_identifier(std::string_view id);

// predictions: header `image_id,score`
PredictionSet parse_predictions_csv(std::string_view text,
                                    std::string model_id = "");
std::string write_predictions_csv(const PredictionSet& preds);

// demographics: header `patient_id,race_ethnicity,sex,age_years`
std::vector<DemographicRecord> parse_demographics_csv(
    std::string_view text, const CategoryMap& category_map,
    Warnings* warnings = nullptr);
std::vector<DemographicRecord> parse_demographics_csv(std::string_view text);
std::string write_demographics_csv(const std::vector<DemographicRecord>& rows);

// diagnoses: header `patient_id,image_id,icd_version,icd_codes,ventilated,site`
// with codes ';'-separated (may be empty).
std::vector<DiagnosisRecord> parse_diagnoses_csv(std::string_view text);
std::string write_diagnoses_csv(const std::vector<DiagnosisRecord>& rows);

// features: header `image_id,f0,...,f63`
std::vector<FeatureRow> parse_features_csv(std::string_view text);
std::string write_features_csv(const std::vector<FeatureRow>& rows);

// labeled cohort: header `patient_id,image_id,label,site`
LabeledCohort parse_cohort_csv(std::string_view text);
std::string write_cohort_csv(const LabeledCohort& cohort);

// splits: header `patient_id,split` with split in {train,valid,test}
std::map<std::string, Split> parse_splits_csv(std::string_view text);
std::string write_splits_csv(const std::map<std::string, Split>& assignment);

// Whole-file helpers (throw ErrorKind::Io on failure).
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace fuseval
