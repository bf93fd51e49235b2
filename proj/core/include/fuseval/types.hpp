#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fuseval/error.hpp"

namespace fuseval {

// Canonical demographic categories. Race-ethnicity and sex are kept as
// validated strings (reports and CSV schemas speak strings throughout);
// validation happens at parse/encode boundaries.
inline const std::vector<std::string>& race_categories() {
  static const std::vector<std::string> k = {"Asian", "Black", "Latino",
                                             "Others", "White"};
  return k;
}

inline const std::vector<std::string>& sex_categories() {
  static const std::vector<std::string> k = {"Female", "Male"};
  return k;
}

// Age bins: [0,40) [40,60) [60,80) [80,inf)
inline const std::vector<std::string>& age_bin_labels() {
  static const std::vector<std::string> k = {"0-40", "40-60", "60-80", "80+"};
  return k;
}

inline int age_bin(int age_years) {
  if (age_years < 40) return 0;
  if (age_years < 60) return 1;
  if (age_years < 80) return 2;
  return 3;
}

constexpr std::size_t kFeatureDim = 64;
constexpr std::size_t kDemographicDim = 10;

struct IcdCode {
  int version = 10;  // 9 or 10
  std::string code;
};

struct DiagnosisRecord {
  std::string patient_id;
  std::string image_id;
  std::vector<IcdCode> codes;  // may be empty
  bool ventilated = false;
  std::string site;
};

struct DemographicRecord {
  std::string patient_id;
  std::string race_ethnicity;  // one of race_categories()
  std::string sex;             // one of sex_categories()
  int age_years = 0;           // 0 <= age < 150
};

// One model's scored outputs over a cohort; the universal currency between
// modules. Two sets are aligned iff their image_id sequences are identical.
struct PredictionSet {
  std::string model_id;
  std::vector<std::string> image_ids;
  std::vector<double> scores;  // each in [0,1]

  std::size_t size() const { return image_ids.size(); }
};

inline bool aligned(const PredictionSet& a, const PredictionSet& b) {
  return a.image_ids == b.image_ids;
}

struct CohortRow {
  std::string patient_id;
  std::string image_id;
  int label = 0;  // 1 = positive
  std::string site;
};

struct LabeledCohort {
  std::vector<CohortRow> rows;

  std::size_t size() const { return rows.size(); }
  std::vector<std::string> image_ids() const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.image_id);
    return out;
  }
  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.label);
    return out;
  }
};

// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t size() const { return pixels.size(); }
  std::uint8_t at(std::size_t x, std::size_t y) const {
    return pixels[y * width + x];
  }
};

struct FeatureRow {
  std::string image_id;
  std::vector<double> values;  // exactly kFeatureDim finite components
};

// Raw-category harmonization used when joining sites whose EHR exports use
// different labels (e.g. "Hispanic" vs Table-style "Latino").
using CategoryMap = std::map<std::string, std::string>;

inline const CategoryMap& default_category_map() {
  static const CategoryMap k = {{"Hispanic", "Latino"}};
  return k;
}

// Maps a raw race-ethnicity string to a canonical category. Unmapped
// values fall back to "Others" with a warning.
std::string canonicalize_race(const std::string& raw, const CategoryMap& map,
                              Warnings* warnings);

inline std::string canonicalize_race(const std::string& raw,
                                     Warnings* warnings = nullptr) {
  return canonicalize_race(raw, default_category_map(), warnings);
}

}  // namespace fuseval
