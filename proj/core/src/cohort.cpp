#include "fuseval/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "fuseval/error.hpp"
#include "fuseval/rng.hpp"

namespace fuseval {

namespace {

std::string strip_dots(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  for (char c : code)
    if (c != '.') out += c;
  return out;
}

}  // namespace

LabelMap default_label_map() {
  LabelMap map;
  map.prefixes[10] = {"J41", "J42", "J43", "J44"};
  map.prefixes[9] = {"491", "492", "496"};
  return map;
}

LabelMap parse_label_map(std::string_view text) {
  LabelMap map;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t'))
      line.remove_prefix(1);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t'))
      line.remove_suffix(1);
    if (line.empty()) {
      if (start > text.size()) break;
      continue;
    }
    auto space = line.find_first_of(" \t");
    if (space == std::string_view::npos)
      raise(ErrorKind::Data, "label map line " + std::to_string(line_no) +
                                 ": expected `icd9|icd10 <prefix>`");
    std::string_view kind = line.substr(0, space);
    std::string_view rest = line.substr(space);
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t'))
      rest.remove_prefix(1);
    int version = 0;
    if (kind == "icd9")
      version = 9;
    else if (kind == "icd10")
      version = 10;
    else
      raise(ErrorKind::Data, "label map line " + std::to_string(line_no) +
                                 ": unknown ICD version tag `" +
                                 std::string(kind) + "`");
    if (rest.empty())
      raise(ErrorKind::Data, "label map line " + std::to_string(line_no) +
                                 ": empty prefix");
    std::string prefix = strip_dots(rest);
    auto& list = map.prefixes[version];
    if (std::find(list.begin(), list.end(), prefix) != list.end())
      raise(ErrorKind::Data, "label map line " + std::to_string(line_no) +
                                 ": duplicate prefix `" + prefix + "`");
    list.push_back(std::move(prefix));
    if (start > text.size()) break;
  }
  return map;
}

std::string write_label_map(const LabelMap& map) {
  std::string out;
  for (const auto& [version, list] : map.prefixes)
    for (const auto& p : list)
      out += "icd" + std::to_string(version) + " " + p + "\n";
  return out;
}

LabeledCohort assign_labels(const std::vector<DiagnosisRecord>& diagnoses,
                            const LabelMap& map) {
  LabeledCohort cohort;
  cohort.rows.reserve(diagnoses.size());
  for (const auto& rec : diagnoses) {
    int label = 0;
    for (const auto& code : rec.codes) {
      if (code.version != 9 && code.version != 10)
        raise(ErrorKind::Data, "unknown ICD version " +
                                   std::to_string(code.version) +
                                   " on image `" + rec.image_id + "`");
      auto it = map.prefixes.find(code.version);
      if (it == map.prefixes.end()) continue;
      const std::string stripped = strip_dots(code.code);
      for (const auto& prefix : it->second) {
        if (stripped.rfind(prefix, 0) == 0) {
          label = 1;
          break;
        }
      }
      if (label) break;
    }
    cohort.rows.push_back({rec.patient_id, rec.image_id, label, rec.site});
  }
  return cohort;
}

LabeledCohort exclude_ventilated(const LabeledCohort& cohort,
                                 const std::vector<DiagnosisRecord>& diagnoses,
                                 Warnings* warnings) {
  std::unordered_map<std::string_view, bool> flag;
  flag.reserve(diagnoses.size());
  for (const auto& rec : diagnoses) flag[rec.image_id] = rec.ventilated;

  LabeledCohort out;
  for (const auto& row : cohort.rows) {
    auto it = flag.find(row.image_id);
    if (it == flag.end())
      raise(ErrorKind::Data,
            "no ventilation flag for image `" + row.image_id + "`");
    if (!it->second) out.rows.push_back(row);
  }
  if (out.rows.empty() && !cohort.rows.empty())
    warn(warnings, "ventilation exclusion removed every cohort row");
  return out;
}

Split SplitAssignment::of(const std::string& patient_id) const {
  auto it = by_patient.find(patient_id);
  if (it == by_patient.end())
    raise(ErrorKind::Data, "patient `" + patient_id + "` has no split");
  return it->second;
}

SplitAssignment split_by_patient(const LabeledCohort& cohort,
                                 const SplitRatios& ratios,
                                 std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.valid <= 0 || ratios.test <= 0)
    raise(ErrorKind::Argument, "split ratios must be positive");
  if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
    raise(ErrorKind::Argument, "split ratios must sum to 1");

  std::set<std::string> distinct;
  for (const auto& row : cohort.rows) distinct.insert(row.patient_id);
  std::vector<std::string> patients(distinct.begin(), distinct.end());
  if (patients.size() < 3)
    raise(ErrorKind::Argument,
          "need at least 3 patients to split, have " +
              std::to_string(patients.size()));

  // std::set iteration already gives lexicographic order; the shuffle below
  // therefore depends only on (patient ids, seed), never on input order.
  Rng rng(seed);
  rng.shuffle(patients);

  const std::size_t n = patients.size();
  const std::size_t cut_train =
      static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
  const std::size_t cut_valid = static_cast<std::size_t>(
      std::floor((ratios.train + ratios.valid) * static_cast<double>(n)));

  SplitAssignment assignment;
  assignment.seed = seed;
  assignment.ratios = ratios;
  for (std::size_t i = 0; i < n; ++i) {
    Split s = i < cut_train ? Split::Train
              : i < cut_valid ? Split::Valid
                              : Split::Test;
    assignment.by_patient.emplace(patients[i], s);
  }
  return assignment;
}

ClassWeights class_weights_from_labels(const std::vector<int>& labels) {
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
  const std::size_t n = labels.size();
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    raise(ErrorKind::Computation, "undefined class weight: single-class cohort");
  return {static_cast<double>(n) / (2.0 * static_cast<double>(n_pos)),
          static_cast<double>(n) / (2.0 * static_cast<double>(n_neg))};
}

ClassWeights class_weights(const LabeledCohort& cohort) {
  return class_weights_from_labels(cohort.labels());
}

LabeledCohort cohort_split(const LabeledCohort& cohort,
                           const SplitAssignment& assignment, Split which) {
  LabeledCohort out;
  for (const auto& row : cohort.rows)
    if (assignment.of(row.patient_id) == which) out.rows.push_back(row);
  return out;
}

}  // namespace fuseval
