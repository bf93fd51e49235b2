#include "fuseval/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "fuseval/config.hpp"
#include "fuseval/error.hpp"
#include "fuseval/rng.hpp"

namespace fuseval {

namespace {

// Stream tags for the independent generator stages.
constexpr std::uint64_t kCohortStream = 1;
constexpr std::uint64_t kPredictionStream = 2;
constexpr std::uint64_t kFeatureStream = 3;

std::size_t draw_categorical(Rng& rng, const std::vector<double>& shares) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    acc += shares[i];
    if (u < acc) return i;
  }
  return shares.size() - 1;
}

void check_proportions(const CategoricalProportions& p, const char* what) {
  if (p.labels.size() != p.shares.size() || p.labels.empty())
    raise(ErrorKind::Argument,
          std::string(what) + " proportions malformed");
  double total = 0.0;
  for (double s : p.shares) {
    if (s < 0.0) raise(ErrorKind::Argument,
                       std::string(what) + " proportions must be >= 0");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-9)
    raise(ErrorKind::Argument, std::string(what) + " proportions must sum to 1");
}

std::string zero_pad(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, value);
  return buf;
}

}  // namespace

SynthConfig::SynthConfig() {
  race.labels = race_categories();
  race.shares = {0.037, 0.169, 0.063, 0.089, 0.642};
  sex.labels = sex_categories();
  sex.shares = {0.52, 0.48};
  age.labels = age_bin_labels();
  age.shares = {0.156, 0.311, 0.369, 0.164};
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_patients == 0)
    raise(ErrorKind::Argument, "synth needs n_patients >= 1");
  if (cfg.prevalence <= 0.0 || cfg.prevalence >= 1.0)
    raise(ErrorKind::Argument, "prevalence must lie in (0,1)");
  if (cfg.images_per_patient_min < 1 ||
      cfg.images_per_patient_max < cfg.images_per_patient_min)
    raise(ErrorKind::Argument, "images_per_patient range malformed");
  if (cfg.model_ids.size() != cfg.model_skills.size() || cfg.model_ids.empty())
    raise(ErrorKind::Argument, "model ids and skills must pair up");
  for (double a : cfg.model_skills)
    if (a < 0.0) raise(ErrorKind::Argument, "model skill must be >= 0");
  if (cfg.shared_noise_weight < 0.0 || cfg.shared_noise_weight > 1.0)
    raise(ErrorKind::Argument, "shared noise weight must lie in [0,1]");
  if (cfg.ventilated_fraction < 0.0 || cfg.ventilated_fraction > 1.0)
    raise(ErrorKind::Argument, "ventilated fraction must lie in [0,1]");
  check_proportions(cfg.race, "race");
  check_proportions(cfg.sex, "sex");
  check_proportions(cfg.age, "age");
}

SynthDataset generate_cohort(const SynthConfig& cfg) {
  validate(cfg);
  const std::uint64_t stream = derive_seed(cfg.seed, kCohortStream);

  SynthDataset data;
  for (std::size_t p = 0; p < cfg.n_patients; ++p) {
    Rng rng(derive_seed(stream, p));
    // Draw order is fixed: race, sex, age bin, age-in-bin, label,
    // ventilation, icd version coin, image count.
    const std::size_t race_idx = draw_categorical(rng, cfg.race.shares);
    const std::size_t sex_idx = draw_categorical(rng, cfg.sex.shares);
    const std::size_t age_idx = draw_categorical(rng, cfg.age.shares);
    int age = 0;
    switch (age_idx) {
      case 0:
        age = static_cast<int>(rng.below(40));
        break;
      case 1:
        age = 40 + static_cast<int>(rng.below(20));
        break;
      case 2:
        age = 60 + static_cast<int>(rng.below(20));
        break;
      default:
        age = 80 + static_cast<int>(rng.below(20));
        break;
    }
    const int label = rng.bernoulli(cfg.prevalence) ? 1 : 0;
    const bool ventilated = rng.bernoulli(cfg.ventilated_fraction);
    const bool icd10 = rng.bernoulli(0.5);
    const std::size_t span =
        cfg.images_per_patient_max - cfg.images_per_patient_min + 1;
    const std::size_t n_images =
        cfg.images_per_patient_min + static_cast<std::size_t>(rng.below(span));

    const std::string patient_id = "p" + zero_pad(p, 6);
    DemographicRecord demo;
    demo.patient_id = patient_id;
    demo.race_ethnicity = cfg.race.labels[race_idx];
    demo.sex = cfg.sex.labels[sex_idx];
    demo.age_years = age;
    data.demographics.push_back(std::move(demo));

    // Codes chosen so assign_labels on the default map round-trips: the
    // positive codes hit the default prefixes, the negatives never do.
    std::vector<IcdCode> codes;
    if (label == 1)
      codes.push_back(icd10 ? IcdCode{10, "J44.9"} : IcdCode{9, "4919"});
    else
      codes.push_back(icd10 ? IcdCode{10, "I10"} : IcdCode{9, "4019"});

    for (std::size_t k = 0; k < n_images; ++k) {
      const std::string image_id = patient_id + "_i" + zero_pad(k, 2);
      data.cohort.rows.push_back({patient_id, image_id, label, cfg.site});
      DiagnosisRecord diag;
      diag.patient_id = patient_id;
      diag.image_id = image_id;
      diag.codes = codes;
      diag.ventilated = ventilated;
      diag.site = cfg.site;
      data.diagnoses.push_back(std::move(diag));
    }
  }
  return data;
}

namespace {

double offset_for(const SynthConfig& cfg, const DemographicRecord& demo) {
  double offset = 0.0;
  for (const auto& o : cfg.group_skill_offsets)
    if (axis_group_of(o.axis, demo) == o.group) offset += o.offset;
  return offset;
}

}  // namespace

std::vector<PredictionSet> generate_base_predictions(const SynthDataset& data,
                                                     const SynthConfig& cfg) {
  validate(cfg);
  const std::uint64_t stream = derive_seed(cfg.seed, kPredictionStream);

  std::unordered_map<std::string_view, const DemographicRecord*> demo_of;
  demo_of.reserve(data.demographics.size());
  for (const auto& d : data.demographics) demo_of.emplace(d.patient_id, &d);

  std::vector<PredictionSet> out(cfg.model_ids.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m].model_id = cfg.model_ids[m];
    out[m].image_ids = data.cohort.image_ids();
    out[m].scores.resize(data.cohort.size());
  }

  for (std::size_t i = 0; i < data.cohort.size(); ++i) {
    const auto& row = data.cohort.rows[i];
    auto dit = demo_of.find(row.patient_id);
    if (dit == demo_of.end())
      raise(ErrorKind::Data,
            "no demographics for patient `" + row.patient_id + "`");
    const double group_offset = offset_for(cfg, *dit->second);

    Rng rng(derive_seed(stream, i));
    const double shared = rng.gaussian();
    const double latent = (2.0 * row.label - 1.0) +
                          cfg.shared_noise_weight * shared;
    for (std::size_t m = 0; m < out.size(); ++m) {
      const double skill = std::max(0.0, cfg.model_skills[m] + group_offset);
      const double noise = rng.gaussian();
      out[m].scores[i] = 1.0 / (1.0 + std::exp(-(skill * latent + noise)));
    }
  }
  return out;
}

std::vector<FeatureRow> generate_features(const SynthDataset& data,
                                          const SynthConfig& cfg) {
  validate(cfg);
  const std::uint64_t stream = derive_seed(cfg.seed, kFeatureStream);

  std::vector<FeatureRow> out;
  out.reserve(data.cohort.size());
  for (std::size_t i = 0; i < data.cohort.size(); ++i) {
    const auto& row = data.cohort.rows[i];
    Rng rng(derive_seed(stream, i));
    FeatureRow rec;
    rec.image_id = row.image_id;
    rec.values.resize(kFeatureDim);
    rec.values[0] =
        cfg.feature_skill * (2.0 * row.label - 1.0) + rng.gaussian();
    for (std::size_t j = 1; j < kFeatureDim; ++j)
      rec.values[j] = rng.gaussian();
    out.push_back(std::move(rec));
  }
  return out;
}

SynthConfig parse_synth_config(const std::string& text) {
  const ConfigFile file = ConfigFile::parse(text);
  SynthConfig cfg;
  cfg.n_patients = static_cast<std::size_t>(
      file.get_int("synth", "patients", static_cast<long>(cfg.n_patients)));
  cfg.prevalence = file.get_real("synth", "prevalence", cfg.prevalence);
  cfg.shared_noise_weight =
      file.get_real("synth", "shared_noise", cfg.shared_noise_weight);
  cfg.feature_skill = file.get_real("synth", "feature_skill", cfg.feature_skill);
  cfg.ventilated_fraction =
      file.get_real("synth", "ventilated_fraction", cfg.ventilated_fraction);
  cfg.site = file.get_or("synth", "site", cfg.site);
  cfg.seed = static_cast<std::uint64_t>(
      file.get_int("synth", "seed", static_cast<long>(cfg.seed)));

  if (auto ipp = file.get("synth", "images_per_patient")) {
    auto dash = ipp->find('-');
    try {
      if (dash == std::string::npos) {
        cfg.images_per_patient_min = cfg.images_per_patient_max =
            static_cast<std::size_t>(std::stoul(*ipp));
      } else {
        cfg.images_per_patient_min =
            static_cast<std::size_t>(std::stoul(ipp->substr(0, dash)));
        cfg.images_per_patient_max =
            static_cast<std::size_t>(std::stoul(ipp->substr(dash + 1)));
      }
    } catch (const std::exception&) {
      raise(ErrorKind::Data, "synth images_per_patient: want N or MIN-MAX");
    }
  }

  if (auto models = file.get("synth", "models")) {
    cfg.model_ids.clear();
    cfg.model_skills.clear();
    for (const auto& item : split_list(*models)) {
      auto colon = item.find(':');
      if (colon == std::string::npos)
        raise(ErrorKind::Data, "synth models: want `id:skill, ...`");
      cfg.model_ids.push_back(item.substr(0, colon));
      try {
        cfg.model_skills.push_back(std::stod(item.substr(colon + 1)));
      } catch (const std::exception&) {
        raise(ErrorKind::Data, "synth models: bad skill in `" + item + "`");
      }
    }
  }

  for (const auto& spec : file.get_all("synth", "group_skill_offset")) {
    auto first = spec.find(':');
    auto second = first == std::string::npos ? std::string::npos
                                             : spec.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos)
      raise(ErrorKind::Data,
            "synth group_skill_offset: want `axis:group:offset`");
    GroupSkillOffset offset;
    offset.axis = parse_axis_name(spec.substr(0, first));
    offset.group = spec.substr(first + 1, second - first - 1);
    try {
      offset.offset = std::stod(spec.substr(second + 1));
    } catch (const std::exception&) {
      raise(ErrorKind::Data, "synth group_skill_offset: bad offset");
    }
    cfg.group_skill_offsets.push_back(std::move(offset));
  }

  auto parse_props = [&](const char* key, CategoricalProportions& props) {
    if (auto value = file.get("synth", key)) {
      CategoricalProportions parsed;
      for (const auto& item : split_list(*value)) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
          raise(ErrorKind::Data, std::string("synth ") + key +
                                     ": want `label:share, ...`");
        parsed.labels.push_back(item.substr(0, colon));
        try {
          parsed.shares.push_back(std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
          raise(ErrorKind::Data, std::string("synth ") + key + ": bad share");
        }
      }
      props = std::move(parsed);
    }
  };
  parse_props("race_proportions", cfg.race);
  parse_props("sex_proportions", cfg.sex);
  parse_props("age_proportions", cfg.age);

  validate(cfg);
  return cfg;
}

}  // namespace fuseval
