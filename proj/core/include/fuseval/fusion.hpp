#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fuseval/learners.hpp"
#include "fuseval/matrix.hpp"
#include "fuseval/types.hpp"

namespace fuseval {

// Pairwise cosine distances between model prediction vectors; symmetric,
// zero diagonal, entries in [0, 2].
struct DistanceMatrix {
  std::vector<std::string> ids;  // model ids, input order
  std::vector<double> values;    // n x n row-major

  std::size_t size() const { return ids.size(); }
  double at(std::size_t i, std::size_t j) const {
    return values[i * ids.size() + j];
  }
  double& at(std::size_t i, std::size_t j) {
    return values[i * ids.size() + j];
  }
};

// Binary merge tree. Nodes [0, n_leaves) are leaves tagged with model_id;
// each merge appends a node whose height is the linkage distance. Heights
// are non-decreasing from leaves to root.
struct DendrogramNode {
  int left = -1;
  int right = -1;
  double height = 0.0;
  int size = 1;
  std::string model_id;  // leaves only

  bool is_leaf() const { return left < 0; }
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<DendrogramNode> nodes;

  int root() const { return static_cast<int>(nodes.size()) - 1; }
};

using WeightVector = std::map<std::string, double>;

PredictionSet unweighted_average(std::span<const PredictionSet> models);

DistanceMatrix cosine_distance_matrix(std::span<const PredictionSet> models);

// Average-linkage agglomeration: repeatedly merge the closest pair of
// clusters, with inter-cluster distance the arithmetic mean of all
// cross-pair leaf distances (Lance-Williams update). Ties broken
// lexicographically by sorted cluster member ids.
Dendrogram upgma_linkage(const DistanceMatrix& distances);

// Recursive equal halving of mass down the merge tree: the root holds mass
// 1 and every internal node gives half to each child, so a leaf's weight is
// 2^-depth. Weights sum to 1 exactly.
WeightVector dendrogram_weights(const Dendrogram& tree);

PredictionSet weighted_average(std::span<const PredictionSet> models,
                               const WeightVector& weights);

// scipy-style merge list: leaves are nodes [0, n), merge i creates node n+i.
std::string dendrogram_to_json(const Dendrogram& tree);

// Meta-model stacking over aligned base-model predictions.
struct StackInputs {
  std::vector<PredictionSet> train;
  std::vector<int> y_train;
  std::vector<PredictionSet> valid;
  std::vector<int> y_valid;
  std::vector<PredictionSet> test;
};

PredictionSet stack(ModelKind kind, const StackInputs& inputs,
                    const TrainConfig& cfg);

// One site's worth of data for the multi-site merge.
struct SiteData {
  LabeledCohort cohort;
  std::vector<DemographicRecord> demographics;
  std::vector<FeatureRow> features;
};

// Concatenates two sites. Every id is prefixed `<site>.` (when not already)
// so the image-id namespaces cannot collide; demographic categories are
// harmonized through the category map.
SiteData merge_sites(const SiteData& a, const SiteData& b,
                     const CategoryMap& category_map,
                     Warnings* warnings = nullptr);

// Ten components: race one-hot (Asian, Black, Latino, Others, White), age
// one-hot over [0,40) [40,60) [60,80) [80,inf), sex (Male=1, Female=0).
std::array<double, kDemographicDim> encode_demographics(
    const DemographicRecord& record);

// Per cohort image, 64 feature components ++ 10 demographic components.
// Row order follows the cohort.
Matrix multimodal_join(const std::vector<FeatureRow>& features,
                       const std::vector<DemographicRecord>& demographics,
                       const LabeledCohort& cohort);

// Feature-only design matrix in cohort order (used by the multi-site
// strategy, where no demographic channel is joined).
Matrix feature_matrix(const std::vector<FeatureRow>& features,
                      const LabeledCohort& cohort);

}  // namespace fuseval
