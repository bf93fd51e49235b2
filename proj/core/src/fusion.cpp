#include "fuseval/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "fuseval/error.hpp"

namespace fuseval {

namespace {

void require_aligned(std::span<const PredictionSet> models) {
  if (models.empty())
    raise(ErrorKind::Argument, "need at least one prediction set");
  for (std::size_t i = 1; i < models.size(); ++i)
    if (!aligned(models[0], models[i]))
      raise(ErrorKind::Alignment, "prediction sets `" + models[0].model_id +
                                      "` and `" + models[i].model_id +
                                      "` are not aligned");
}

}  // namespace

PredictionSet unweighted_average(std::span<const PredictionSet> models) {
  require_aligned(models);
  PredictionSet out;
  out.model_id = "bag:unweighted";
  out.image_ids = models[0].image_ids;
  out.scores.assign(models[0].size(), 0.0);
  for (const auto& m : models)
    for (std::size_t i = 0; i < m.size(); ++i) out.scores[i] += m.scores[i];
  const double inv = 1.0 / static_cast<double>(models.size());
  for (auto& s : out.scores) s *= inv;
  return out;
}

DistanceMatrix cosine_distance_matrix(std::span<const PredictionSet> models) {
  if (models.size() < 2)
    raise(ErrorKind::Argument, "cosine distances need at least two models");
  require_aligned(models);

  std::vector<double> norms(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    double n2 = 0.0;
    for (double s : models[i].scores) n2 += s * s;
    if (n2 == 0.0)
      raise(ErrorKind::Computation, "zero-norm score vector for model `" +
                                        models[i].model_id + "`");
    norms[i] = std::sqrt(n2);
  }

  DistanceMatrix d;
  for (const auto& m : models) d.ids.push_back(m.model_id);
  d.values.assign(models.size() * models.size(), 0.0);
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < models[i].size(); ++k)
        dot += models[i].scores[k] * models[j].scores[k];
      const double dist = 1.0 - dot / (norms[i] * norms[j]);
      d.at(i, j) = dist;
      d.at(j, i) = dist;
    }
  }
  return d;
}

namespace {

struct Cluster {
  int node = -1;
  int size = 0;
  std::vector<std::string> members;  // sorted, the tie-break key
};

}  // namespace

Dendrogram upgma_linkage(const DistanceMatrix& distances) {
  const std::size_t n = distances.size();
  if (n == 0) raise(ErrorKind::Argument, "empty distance matrix");

  Dendrogram tree;
  tree.n_leaves = n;
  for (std::size_t i = 0; i < n; ++i) {
    DendrogramNode leaf;
    leaf.model_id = distances.ids[i];
    tree.nodes.push_back(std::move(leaf));
  }

  std::vector<Cluster> active;
  for (std::size_t i = 0; i < n; ++i)
    active.push_back({static_cast<int>(i), 1, {distances.ids[i]}});

  // Working copy of pairwise distances between active clusters, indexed by
  // position in `active`.
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = distances.at(i, j);

  while (active.size() > 1) {
    std::size_t bi = 0, bj = 1;
    bool have = false;
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        // Order the candidate pair by member key before comparing, so
        // tie-breaking is on (distance, smaller key, larger key).
        const bool ij = active[i].members < active[j].members;
        const auto& lo = ij ? active[i].members : active[j].members;
        const auto& hi = ij ? active[j].members : active[i].members;
        if (!have) {
          bi = i;
          bj = j;
          have = true;
          continue;
        }
        const bool bij = active[bi].members < active[bj].members;
        const auto& blo = bij ? active[bi].members : active[bj].members;
        const auto& bhi = bij ? active[bj].members : active[bi].members;
        const double cur = d[i][j], best = d[bi][bj];
        if (cur < best ||
            (cur == best && (lo < blo || (lo == blo && hi < bhi)))) {
          bi = i;
          bj = j;
        }
      }
    }

    // Left child is the lexicographically smaller cluster.
    const bool keep_order = active[bi].members < active[bj].members;
    const std::size_t li = keep_order ? bi : bj;
    const std::size_t ri = keep_order ? bj : bi;

    DendrogramNode merge;
    merge.left = active[li].node;
    merge.right = active[ri].node;
    merge.height = d[bi][bj];
    merge.size = active[li].size + active[ri].size;
    merge.model_id.clear();
    tree.nodes.push_back(merge);

    Cluster fused;
    fused.node = static_cast<int>(tree.nodes.size()) - 1;
    fused.size = merge.size;
    fused.members = active[li].members;
    fused.members.insert(fused.members.end(), active[ri].members.begin(),
                         active[ri].members.end());
    std::sort(fused.members.begin(), fused.members.end());

    // Average-linkage update: d(uv, k) = (|u| d(u,k) + |v| d(v,k)) / |uv|.
    const std::size_t keep = std::min(bi, bj);
    const std::size_t drop = std::max(bi, bj);
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k == bi || k == bj) continue;
      const double merged =
          (static_cast<double>(active[bi].size) * d[bi][k] +
           static_cast<double>(active[bj].size) * d[bj][k]) /
          static_cast<double>(fused.size);
      d[keep][k] = merged;
      d[k][keep] = merged;
    }
    active[keep] = std::move(fused);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    d.erase(d.begin() + static_cast<std::ptrdiff_t>(drop));
    for (auto& row : d) row.erase(row.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return tree;
}

namespace {

void accumulate_weights(const Dendrogram& tree, int node, double mass,
                        WeightVector& weights) {
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    weights[n.model_id] += mass;
    return;
  }
  accumulate_weights(tree, n.left, mass / 2.0, weights);
  accumulate_weights(tree, n.right, mass / 2.0, weights);
}

}  // namespace

WeightVector dendrogram_weights(const Dendrogram& tree) {
  WeightVector weights;
  if (tree.nodes.empty()) return weights;
  accumulate_weights(tree, tree.root(), 1.0, weights);
  return weights;
}

PredictionSet weighted_average(std::span<const PredictionSet> models,
                               const WeightVector& weights) {
  require_aligned(models);
  if (weights.size() != models.size())
    raise(ErrorKind::Argument, "weight vector has " +
                                   std::to_string(weights.size()) +
                                   " entries for " +
                                   std::to_string(models.size()) + " models");
  double total = 0.0;
  for (const auto& m : models) {
    auto it = weights.find(m.model_id);
    if (it == weights.end())
      raise(ErrorKind::Argument, "no weight for model `" + m.model_id + "`");
    if (it->second < 0.0)
      raise(ErrorKind::Argument, "negative weight for model `" + m.model_id + "`");
    total += it->second;
  }
  if (std::abs(total - 1.0) > 1e-9)
    raise(ErrorKind::Argument, "weights must sum to 1");

  PredictionSet out;
  out.model_id = "bag:weighted";
  out.image_ids = models[0].image_ids;
  out.scores.assign(models[0].size(), 0.0);
  for (const auto& m : models) {
    const double w = weights.at(m.model_id);
    for (std::size_t i = 0; i < m.size(); ++i)
      out.scores[i] += w * m.scores[i];
  }
  return out;
}

std::string dendrogram_to_json(const Dendrogram& tree) {
  nlohmann::json j;
  j["leaves"] = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.n_leaves; ++i)
    j["leaves"].push_back(tree.nodes[i].model_id);
  j["merges"] = nlohmann::json::array();
  for (std::size_t i = tree.n_leaves; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    j["merges"].push_back({{"left", n.left},
                           {"right", n.right},
                           {"height", n.height},
                           {"size", n.size}});
  }
  return j.dump(2) + "\n";
}

namespace {

Matrix stack_features(std::span<const PredictionSet> models) {
  Matrix m(models[0].size(), models.size());
  for (std::size_t k = 0; k < models.size(); ++k)
    for (std::size_t i = 0; i < models[k].size(); ++i)
      m.at(i, k) = models[k].scores[i];
  return m;
}

void require_same_model_list(std::span<const PredictionSet> a,
                             std::span<const PredictionSet> b,
                             const char* what) {
  if (a.size() != b.size())
    raise(ErrorKind::Argument,
          std::string("model lists differ between train and ") + what);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].model_id != b[i].model_id)
      raise(ErrorKind::Argument,
            std::string("model lists differ between train and ") + what +
                ": `" + a[i].model_id + "` vs `" + b[i].model_id + "`");
}

}  // namespace

PredictionSet stack(ModelKind kind, const StackInputs& inputs,
                    const TrainConfig& cfg) {
  if (inputs.train.empty())
    raise(ErrorKind::Argument, "stacking needs at least one base model");
  require_aligned(inputs.train);
  require_aligned(inputs.test);
  require_same_model_list(inputs.train, inputs.test, "test");
  if (inputs.train[0].size() != inputs.y_train.size())
    raise(ErrorKind::Argument, "train labels do not match train predictions");

  Matrix x_train = stack_features(inputs.train);
  Matrix x_valid;
  std::vector<int> y_valid;
  if (!inputs.valid.empty()) {
    require_aligned(inputs.valid);
    require_same_model_list(inputs.train, inputs.valid, "valid");
    if (inputs.valid[0].size() != inputs.y_valid.size())
      raise(ErrorKind::Argument, "valid labels do not match valid predictions");
    x_valid = stack_features(inputs.valid);
    y_valid = inputs.y_valid;
  }
  Matrix x_test = stack_features(inputs.test);

  Model model = Model::train(kind, x_train, inputs.y_train, x_valid, y_valid, cfg);

  PredictionSet out;
  out.model_id = "stack:" + model_kind_name(kind);
  out.image_ids = inputs.test[0].image_ids;
  out.scores = model.predict(x_test);
  return out;
}

namespace {

std::string site_prefixed(const std::string& id, const std::string& site) {
  const std::string prefix = site + ".";
  if (id.rfind(prefix, 0) == 0) return id;
  return prefix + id;
}

SiteData prefix_site(const SiteData& in) {
  SiteData out;
  out.cohort.rows.reserve(in.cohort.rows.size());
  for (const auto& row : in.cohort.rows) {
    CohortRow r = row;
    r.patient_id = site_prefixed(r.patient_id, r.site);
    r.image_id = site_prefixed(r.image_id, r.site);
    out.cohort.rows.push_back(std::move(r));
  }
  // Demographic and feature tables carry no site column; the cohort's site
  // tags are authoritative. A single-site table is the supported shape.
  std::string site = in.cohort.rows.empty() ? "" : in.cohort.rows[0].site;
  for (const auto& rec : in.demographics) {
    DemographicRecord r = rec;
    r.patient_id = site_prefixed(r.patient_id, site);
    out.demographics.push_back(std::move(r));
  }
  for (const auto& rec : in.features) {
    FeatureRow r = rec;
    r.image_id = site_prefixed(r.image_id, site);
    out.features.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SiteData merge_sites(const SiteData& a, const SiteData& b,
                     const CategoryMap& category_map, Warnings* warnings) {
  SiteData pa = prefix_site(a);
  SiteData pb = prefix_site(b);

  SiteData merged = std::move(pa);
  merged.cohort.rows.insert(merged.cohort.rows.end(), pb.cohort.rows.begin(),
                            pb.cohort.rows.end());
  merged.demographics.insert(merged.demographics.end(),
                             pb.demographics.begin(), pb.demographics.end());
  merged.features.insert(merged.features.end(), pb.features.begin(),
                         pb.features.end());

  std::set<std::string_view> seen;
  for (const auto& row : merged.cohort.rows)
    if (!seen.insert(row.image_id).second)
      raise(ErrorKind::Data,
            "image id collision after site prefixing: `" + row.image_id + "`");

  for (auto& rec : merged.demographics)
    rec.race_ethnicity =
        canonicalize_race(rec.race_ethnicity, category_map, warnings);
  return merged;
}

std::array<double, kDemographicDim> encode_demographics(
    const DemographicRecord& record) {
  std::array<double, kDemographicDim> out{};
  const auto& races = race_categories();
  auto rit = std::find(races.begin(), races.end(), record.race_ethnicity);
  if (rit == races.end())
    raise(ErrorKind::Data, "unknown race-ethnicity category `" +
                               record.race_ethnicity + "` for patient `" +
                               record.patient_id + "`");
  out[static_cast<std::size_t>(rit - races.begin())] = 1.0;

  if (record.age_years < 0 || record.age_years >= 150)
    raise(ErrorKind::Data, "age out of range for patient `" +
                               record.patient_id + "`");
  out[5 + static_cast<std::size_t>(age_bin(record.age_years))] = 1.0;

  if (record.sex == "Male")
    out[9] = 1.0;
  else if (record.sex == "Female")
    out[9] = 0.0;
  else
    raise(ErrorKind::Data, "unknown sex category `" + record.sex +
                               "` for patient `" + record.patient_id + "`");
  return out;
}

namespace {

std::unordered_map<std::string_view, const FeatureRow*> index_features(
    const std::vector<FeatureRow>& features) {
  std::unordered_map<std::string_view, const FeatureRow*> map;
  map.reserve(features.size());
  for (const auto& f : features) map.emplace(f.image_id, &f);
  return map;
}

const FeatureRow& feature_for(
    const std::unordered_map<std::string_view, const FeatureRow*>& map,
    const std::string& image_id) {
  auto it = map.find(image_id);
  if (it == map.end())
    raise(ErrorKind::Data, "no feature row for image `" + image_id + "`");
  if (it->second->values.size() != kFeatureDim)
    raise(ErrorKind::Data, "feature row for image `" + image_id + "` has " +
                               std::to_string(it->second->values.size()) +
                               " components");
  return *it->second;
}

}  // namespace

Matrix multimodal_join(const std::vector<FeatureRow>& features,
                       const std::vector<DemographicRecord>& demographics,
                       const LabeledCohort& cohort) {
  auto fmap = index_features(features);
  std::unordered_map<std::string_view, const DemographicRecord*> dmap;
  dmap.reserve(demographics.size());
  for (const auto& d : demographics) dmap.emplace(d.patient_id, &d);

  Matrix m(cohort.size(), kFeatureDim + kDemographicDim);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& row = cohort.rows[i];
    const FeatureRow& f = feature_for(fmap, row.image_id);
    auto dit = dmap.find(row.patient_id);
    if (dit == dmap.end())
      raise(ErrorKind::Data,
            "no demographics for patient `" + row.patient_id + "`");
    const auto demo = encode_demographics(*dit->second);
    for (std::size_t j = 0; j < kFeatureDim; ++j) m.at(i, j) = f.values[j];
    for (std::size_t j = 0; j < kDemographicDim; ++j)
      m.at(i, kFeatureDim + j) = demo[j];
  }
  return m;
}

Matrix feature_matrix(const std::vector<FeatureRow>& features,
                      const LabeledCohort& cohort) {
  auto fmap = index_features(features);
  Matrix m(cohort.size(), kFeatureDim);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const FeatureRow& f = feature_for(fmap, cohort.rows[i].image_id);
    for (std::size_t j = 0; j < kFeatureDim; ++j) m.at(i, j) = f.values[j];
  }
  return m;
}

}  // namespace fuseval
