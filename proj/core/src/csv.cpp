#include "fuseval/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fuseval/error.hpp"

namespace fuseval {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

void expect_header(std::string_view got, std::string_view want,
                   const char* schema) {
  if (got != want)
    raise(ErrorKind::Schema, std::string(schema) + ": expected header `" +
                                 std::string(want) + "`, got `" +
                                 std::string(got) + "`");
}

double parse_real(std::string_view field, std::size_t row, const char* what) {
  double value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    raise(ErrorKind::Data, std::string(what) + " not numeric, row " +
                               std::to_string(row));
  return value;
}

long parse_int(std::string_view field, std::size_t row, const char* what) {
  long value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    raise(ErrorKind::Data, std::string(what) + " not an integer, row " +
                               std::to_string(row));
  return value;
}

std::string check_id(std::string_view field, std::size_t row,
                     const char* what) {
  if (!valid_identifier(field))
    raise(ErrorKind::Data, std::string(what) + " is not a valid identifier " +
                               "(charset [A-Za-z0-9_.-]+), row " +
                               std::to_string(row));
  return std::string(field);
}

// Full-precision decimal for a score in [0,1]; shortest form that
// round-trips, so write(parse(x)) is byte-stable.
std::string format_score(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

void require_field_count(const std::vector<std::string_view>& fields,
                         std::size_t want, std::size_t row,
                         const char* schema) {
  if (fields.size() != want)
    raise(ErrorKind::Data, std::string(schema) + ": expected " +
                               std::to_string(want) + " fields, got " +
                               std::to_string(fields.size()) + ", row " +
                               std::to_string(row));
}

}  // namespace

bool valid_identifier(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '-';
  });
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Valid:
      return "valid";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split parse_split_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  raise(ErrorKind::Data, "unknown split name `" + name + "`");
}

std::string canonicalize_race(const std::string& raw, const CategoryMap& map,
                              Warnings* warnings) {
  const auto& canonical = race_categories();
  if (std::find(canonical.begin(), canonical.end(), raw) != canonical.end())
    return raw;
  auto it = map.find(raw);
  if (it != map.end()) {
    if (std::find(canonical.begin(), canonical.end(), it->second) ==
        canonical.end())
      raise(ErrorKind::Data, "category map target `" + it->second +
                                 "` is not a canonical race category");
    return it->second;
  }
  warn(warnings, "race-ethnicity category `" + raw +
                     "` has no canonical mapping; using Others");
  return "Others";
}

PredictionSet parse_predictions_csv(std::string_view text,
                                    std::string model_id) {
  auto lines = split_lines(text);
  if (lines.empty())
    raise(ErrorKind::Schema, "predictions: missing header `image_id,score`");
  expect_header(lines[0], "image_id,score", "predictions");

  PredictionSet out;
  out.model_id = std::move(model_id);
  std::set<std::string_view> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = i;  // 1-based over data rows
    auto fields = split_fields(lines[i], ',');
    require_field_count(fields, 2, row, "predictions");
    std::string id = check_id(fields[0], row, "image_id");
    double score = parse_real(fields[1], row, "score");
    if (score < 0.0 || score > 1.0)
      raise(ErrorKind::Data, "score out of range, row " + std::to_string(row));
    if (!seen.insert(fields[0]).second)
      raise(ErrorKind::Data,
            "duplicate image_id `" + id + "`, row " + std::to_string(row));
    out.image_ids.push_back(std::move(id));
    out.scores.push_back(score);
  }
  return out;
}

std::string write_predictions_csv(const PredictionSet& preds) {
  std::string out = "image_id,score\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += preds.image_ids[i];
    out += ',';
    out += format_score(preds.scores[i]);
    out += '\n';
  }
  return out;
}

std::vector<DemographicRecord> parse_demographics_csv(
    std::string_view text, const CategoryMap& category_map,
    Warnings* warnings) {
  auto lines = split_lines(text);
  if (lines.empty())
    raise(ErrorKind::Schema, "demographics: missing header");
  expect_header(lines[0], "patient_id,race_ethnicity,sex,age_years",
                "demographics");
  std::vector<DemographicRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = i;
    auto fields = split_fields(lines[i], ',');
    require_field_count(fields, 4, row, "demographics");
    DemographicRecord rec;
    rec.patient_id = check_id(fields[0], row, "patient_id");
    rec.race_ethnicity =
        canonicalize_race(std::string(fields[1]), category_map, warnings);
    rec.sex = std::string(fields[2]);
    const auto& sexes = sex_categories();
    if (std::find(sexes.begin(), sexes.end(), rec.sex) == sexes.end())
      raise(ErrorKind::Data,
            "unknown sex category `" + rec.sex + "`, row " +
                std::to_string(row));
    long age = parse_int(fields[3], row, "age_years");
    if (age < 0 || age >= 150)
      raise(ErrorKind::Data,
            "age_years out of range [0,150), row " + std::to_string(row));
    rec.age_years = static_cast<int>(age);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DemographicRecord> parse_demographics_csv(std::string_view text) {
  return parse_demographics_csv(text, default_category_map(), nullptr);
}

std::string write_demographics_csv(
    const std::vector<DemographicRecord>& rows) {
  std::string out = "patient_id,race_ethnicity,sex,age_years\n";
  for (const auto& r : rows) {
    out += r.patient_id + ',' + r.race_ethnicity + ',' + r.sex + ',' +
           std::to_string(r.age_years) + '\n';
  }
  return out;
}

std::vector<DiagnosisRecord> parse_diagnoses_csv(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty()) raise(ErrorKind::Schema, "diagnoses: missing header");
  expect_header(lines[0],
                "patient_id,image_id,icd_version,icd_codes,ventilated,site",
                "diagnoses");
  std::vector<DiagnosisRecord> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = i;
    auto fields = split_fields(lines[i], ',');
    require_field_count(fields, 6, row, "diagnoses");
    DiagnosisRecord rec;
    rec.patient_id = check_id(fields[0], row, "patient_id");
    rec.image_id = check_id(fields[1], row, "image_id");
    long version = parse_int(fields[2], row, "icd_version");
    if (version != 9 && version != 10)
      raise(ErrorKind::Data,
            "unknown ICD version " + std::to_string(version) + ", row " +
                std::to_string(row));
    if (!fields[3].empty()) {
      for (auto code : split_fields(fields[3], ';')) {
        if (code.empty())
          raise(ErrorKind::Data, "empty ICD code, row " + std::to_string(row));
        rec.codes.push_back({static_cast<int>(version), std::string(code)});
      }
    }
    long vent = parse_int(fields[4], row, "ventilated");
    if (vent != 0 && vent != 1)
      raise(ErrorKind::Data,
            "ventilated must be 0 or 1, row " + std::to_string(row));
    rec.ventilated = vent == 1;
    rec.site = check_id(fields[5], row, "site");
    if (!seen.insert(rec.image_id).second)
      raise(ErrorKind::Data, "duplicate image_id `" + rec.image_id +
                                 "`, row " + std::to_string(row));
    out.push_back(std::move(rec));
  }
  return out;
}

std::string write_diagnoses_csv(const std::vector<DiagnosisRecord>& rows) {
  std::string out = "patient_id,image_id,icd_version,icd_codes,ventilated,site\n";
  for (const auto& r : rows) {
    // The row schema carries one icd_version column; records constructed in
    // memory may mix versions, which needs one row per version group. All
    // writers in this codebase emit single-version records.
    int version = r.codes.empty() ? 10 : r.codes.front().version;
    std::string codes;
    for (std::size_t i = 0; i < r.codes.size(); ++i) {
      if (i > 0) codes += ';';
      codes += r.codes[i].code;
    }
    out += r.patient_id + ',' + r.image_id + ',' + std::to_string(version) +
           ',' + codes + ',' + (r.ventilated ? "1" : "0") + ',' + r.site +
           '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_features_csv(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty()) raise(ErrorKind::Schema, "features: missing header");
  std::string want = "image_id";
  for (std::size_t i = 0; i < kFeatureDim; ++i)
    want += ",f" + std::to_string(i);
  expect_header(lines[0], want, "features");
  std::vector<FeatureRow> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = i;
    auto fields = split_fields(lines[i], ',');
    require_field_count(fields, kFeatureDim + 1, row, "features");
    FeatureRow rec;
    rec.image_id = check_id(fields[0], row, "image_id");
    rec.values.reserve(kFeatureDim);
    for (std::size_t j = 1; j < fields.size(); ++j)
      rec.values.push_back(parse_real(fields[j], row, "feature"));
    if (!seen.insert(rec.image_id).second)
      raise(ErrorKind::Data, "duplicate image_id `" + rec.image_id +
                                 "`, row " + std::to_string(row));
    out.push_back(std::move(rec));
  }
  return out;
}

std::string write_features_csv(const std::vector<FeatureRow>& rows) {
  std::string out = "image_id";
  for (std::size_t i = 0; i < kFeatureDim; ++i) out += ",f" + std::to_string(i);
  out += '\n';
  for (const auto& r : rows) {
    if (r.values.size() != kFeatureDim)
      raise(ErrorKind::Data, "feature row `" + r.image_id + "` has " +
                                 std::to_string(r.values.size()) +
                                 " components, expected " +
                                 std::to_string(kFeatureDim));
    out += r.image_id;
    for (double v : r.values) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

LabeledCohort parse_cohort_csv(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty()) raise(ErrorKind::Schema, "cohort: missing header");
  expect_header(lines[0], "patient_id,image_id,label,site", "cohort");
  LabeledCohort out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = i;
    auto fields = split_fields(lines[i], ',');
    require_field_count(fields, 4, row, "cohort");
    CohortRow rec;
    rec.patient_id = check_id(fields[0], row, "patient_id");
    rec.image_id = check_id(fields[1], row, "image_id");
    long label = parse_int(fields[2], row, "label");
    if (label != 0 && label != 1)
      raise(ErrorKind::Data,
            "label must be 0 or 1, row " + std::to_string(row));
    rec.label = static_cast<int>(label);
    rec.site = check_id(fields[3], row, "site");
    if (!seen.insert(rec.image_id).second)
      raise(ErrorKind::Data, "duplicate image_id `" + rec.image_id +
                                 "`, row " + std::to_string(row));
    out.rows.push_back(std::move(rec));
  }
  return out;
}

std::string write_cohort_csv(const LabeledCohort& cohort) {
  std::string out = "patient_id,image_id,label,site\n";
  for (const auto& r : cohort.rows)
    out += r.patient_id + ',' + r.image_id + ',' + std::to_string(r.label) +
           ',' + r.site + '\n';
  return out;
}

std::map<std::string, Split> parse_splits_csv(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty()) raise(ErrorKind::Schema, "splits: missing header");
  expect_header(lines[0], "patient_id,split", "splits");
  std::map<std::string, Split> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = i;
    auto fields = split_fields(lines[i], ',');
    require_field_count(fields, 2, row, "splits");
    std::string id = check_id(fields[0], row, "patient_id");
    if (out.count(id))
      raise(ErrorKind::Data,
            "duplicate patient_id `" + id + "`, row " + std::to_string(row));
    out.emplace(std::move(id), parse_split_name(std::string(fields[1])));
  }
  return out;
}

std::string write_splits_csv(const std::map<std::string, Split>& assignment) {
  std::string out = "patient_id,split\n";
  for (const auto& [patient, split] : assignment)
    out += patient + ',' + split_name(split) + '\n';
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open `" + path + "` for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::Io, "cannot open `" + path + "` for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) raise(ErrorKind::Io, "short write to `" + path + "`");
}

}  // namespace fuseval
