#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "docclass/vectorspace.hpp"

namespace docclass {

// Ground-truth-labeled embeddings, indexed by class. Labels are class ids;
// every class present has at least one member and all vectors share a dim.
class LabeledEmbeddingSet {
 public:
  struct Item {
    std::string doc_id;
    std::string label;
    EmbeddingVector vector;
  };

  explicit LabeledEmbeddingSet(std::vector<Item> items);

  const std::vector<Item>& items() const { return items_; }
  // label -> member indices, ascending; iteration order is sorted by label.
  const std::map<std::string, std::vector<std::size_t>>& class_index() const {
    return class_index_;
  }
  std::size_t size() const { return items_.size(); }
  std::size_t class_count() const { return class_index_.size(); }
  std::size_t dim() const { return dim_; }

 private:
  std::vector<Item> items_;
  std::map<std::string, std::vector<std::size_t>> class_index_;
  std::size_t dim_ = 0;
};

struct ClusterQualityReport {
  double intra = 0.0;
  double inter = 0.0;
  double ratio = 0.0;  // inter/intra; +inf sentinel when intra == 0, inter > 0
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;
  std::map<std::string, double> per_class_intra;
};

// Mean cosine distance from each class centroid to its members, then the
// unweighted mean over classes:
//   overall = (1/C) sum_c (1/N_c) sum_i d_cos(mu_c, x_i)
std::pair<double, std::map<std::string, double>> intra_distance(
    const LabeledEmbeddingSet& set);

// Mean centroid-to-centroid cosine distance over ordered pairs:
//   (1/(C(C-1))) sum_{cA != cB} d_cos(mu_cA, mu_cB)
double inter_distance(const LabeledEmbeddingSet& set);

// Mean over points of (b-a)/max(a,b) with cosine point distances; a is the
// mean distance to own-class co-members (0 contribution when N_c == 1), b the
// smallest mean distance to any other class.
double silhouette(const LabeledEmbeddingSet& set);

// (1/C) sum_c max_{c' != c} (S_c + S_c')/M_cc' with S the per-class intra
// term and M the centroid cosine distance. Coincident centroids (M == 0)
// yield +inf rather than an error so batch reports never abort.
double davies_bouldin(const LabeledEmbeddingSet& set);

// Variance-ratio index on squared Euclidean distances:
//   [BGSS/(C-1)] / [WGSS/(n-C)]
// WGSS == 0 yields +inf unless BGSS is also 0, which yields 0.
double calinski_harabasz(const LabeledEmbeddingSet& set);

// All five metrics plus ratio, computed in one pass over shared centroids.
ClusterQualityReport cluster_report(const LabeledEmbeddingSet& set);

// Flat object with keys exactly {intra, inter, ratio, silhouette,
// davies_bouldin, calinski_harabasz}; +inf values serialize as "inf".
std::string serialize_cluster_report(const ClusterQualityReport& report);
ClusterQualityReport parse_cluster_report(const std::string& json_text);

}  // namespace docclass
