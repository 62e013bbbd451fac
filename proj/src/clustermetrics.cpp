#include "docclass/clustermetrics.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "docclass/errors.hpp"

namespace docclass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::map<std::string, EmbeddingVector> class_centroids(
    const LabeledEmbeddingSet& set) {
  std::map<std::string, EmbeddingVector> out;
  for (const auto& [label, members] : set.class_index()) {
    std::vector<EmbeddingVector> vs;
    vs.reserve(members.size());
    for (std::size_t i : members) vs.push_back(set.items()[i].vector);
    out.emplace(label, centroid(vs));
  }
  return out;
}

double centroid_member_distance(const EmbeddingVector& mu,
                                const EmbeddingVector& x,
                                const std::string& label) {
  if (norm(mu) == 0.0)
    throw Error(Errc::degenerate_centroid, "class centroid has zero norm", label);
  return cosine_distance(mu, x);
}

void require_classes(const LabeledEmbeddingSet& set, std::size_t min_classes) {
  if (set.class_count() < min_classes)
    throw Error(Errc::too_few_classes,
                "need at least " + std::to_string(min_classes) +
                    " classes, got " + std::to_string(set.class_count()));
}

}  // namespace

LabeledEmbeddingSet::LabeledEmbeddingSet(std::vector<Item> items)
    : items_(std::move(items)) {
  if (items_.empty())
    throw Error(Errc::empty_input, "labeled embedding set is empty");
  dim_ = items_.front().vector.size();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].vector.size() != dim_)
      throw Error(Errc::dimension_mismatch,
                  "vector dim " + std::to_string(items_[i].vector.size()) +
                      " != " + std::to_string(dim_),
                  items_[i].doc_id);
    class_index_[items_[i].label].push_back(i);
  }
}

std::pair<double, std::map<std::string, double>> intra_distance(
    const LabeledEmbeddingSet& set) {
  auto centroids = class_centroids(set);
  std::map<std::string, double> per_class;
  double overall = 0.0;
  for (const auto& [label, members] : set.class_index()) {
    const auto& mu = centroids.at(label);
    double acc = 0.0;
    for (std::size_t i : members)
      acc += centroid_member_distance(mu, set.items()[i].vector, label);
    double mean = acc / static_cast<double>(members.size());
    per_class.emplace(label, mean);
    overall += mean;
  }
  overall /= static_cast<double>(set.class_count());
  return {overall, per_class};
}

double inter_distance(const LabeledEmbeddingSet& set) {
  require_classes(set, 2);
  auto centroids = class_centroids(set);
  for (const auto& [label, mu] : centroids) {
    if (norm(mu) == 0.0)
      throw Error(Errc::degenerate_centroid, "class centroid has zero norm", label);
  }
  double acc = 0.0;
  for (const auto& [la, ma] : centroids) {
    for (const auto& [lb, mb] : centroids) {
      if (la == lb) continue;
      acc += cosine_distance(ma, mb);
    }
  }
  const double c = static_cast<double>(set.class_count());
  return acc / (c * (c - 1.0));
}

double silhouette(const LabeledEmbeddingSet& set) {
  require_classes(set, 2);
  const auto& items = set.items();
  const std::size_t n = items.size();

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // mean distance to every class, fixed member order
    std::map<std::string, double> mean_to_class;
    for (const auto& [label, members] : set.class_index()) {
      double acc = 0.0;
      std::size_t count = 0;
      for (std::size_t j : members) {
        if (j == i) continue;
        acc += cosine_distance(items[i].vector, items[j].vector);
        ++count;
      }
      if (label == items[i].label && count == 0) continue;  // singleton class
      mean_to_class[label] = acc / static_cast<double>(count);
    }

    auto own = mean_to_class.find(items[i].label);
    if (own == mean_to_class.end()) continue;  // N_c == 1 -> s(i) = 0
    double a = own->second;
    double b = kInf;
    for (const auto& [label, mean] : mean_to_class) {
      if (label == items[i].label) continue;
      b = std::min(b, mean);
    }
    double denom = std::max(a, b);
    total += (denom == 0.0) ? 0.0 : (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(const LabeledEmbeddingSet& set) {
  require_classes(set, 2);
  auto centroids = class_centroids(set);
  auto [overall, per_class] = intra_distance(set);
  (void)overall;

  double acc = 0.0;
  for (const auto& [la, ma] : centroids) {
    double worst = 0.0;
    for (const auto& [lb, mb] : centroids) {
      if (la == lb) continue;
      double m = cosine_distance(ma, mb);
      double s = per_class.at(la) + per_class.at(lb);
      double r = (m == 0.0) ? kInf : s / m;
      worst = std::max(worst, r);
    }
    acc += worst;
  }
  return acc / static_cast<double>(set.class_count());
}

double calinski_harabasz(const LabeledEmbeddingSet& set) {
  require_classes(set, 2);
  const auto& items = set.items();
  const std::size_t n = items.size();
  const std::size_t c = set.class_count();
  const std::size_t dim = set.dim();

  std::vector<EmbeddingVector> all;
  all.reserve(n);
  for (const auto& it : items) all.push_back(it.vector);
  EmbeddingVector global = centroid(all);

  auto centroids = class_centroids(set);

  double bgss = 0.0;
  double wgss = 0.0;
  for (const auto& [label, members] : set.class_index()) {
    const auto& mu = centroids.at(label);
    double d2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      double d = mu[k] - global[k];
      d2 += d * d;
    }
    bgss += static_cast<double>(members.size()) * d2;
    for (std::size_t i : members) {
      double w2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double d = items[i].vector[k] - mu[k];
        w2 += d * d;
      }
      wgss += w2;
    }
  }

  if (wgss == 0.0) return bgss == 0.0 ? 0.0 : kInf;
  return (bgss / static_cast<double>(c - 1)) /
         (wgss / static_cast<double>(n - c));
}

ClusterQualityReport cluster_report(const LabeledEmbeddingSet& set) {
  require_classes(set, 2);
  ClusterQualityReport r;
  auto [overall, per_class] = intra_distance(set);
  r.intra = overall;
  r.per_class_intra = std::move(per_class);
  r.inter = inter_distance(set);
  if (r.intra > 0.0)
    r.ratio = r.inter / r.intra;
  else
    r.ratio = (r.inter == 0.0) ? 0.0 : kInf;
  r.silhouette = silhouette(set);
  r.davies_bouldin = davies_bouldin(set);
  r.calinski_harabasz = calinski_harabasz(set);
  return r;
}

std::string serialize_cluster_report(const ClusterQualityReport& report) {
  nlohmann::json j;
  auto put = [&j](const char* key, double v) {
    if (std::isinf(v))
      j[key] = "inf";
    else
      j[key] = v;
  };
  put("intra", report.intra);
  put("inter", report.inter);
  put("ratio", report.ratio);
  put("silhouette", report.silhouette);
  put("davies_bouldin", report.davies_bouldin);
  put("calinski_harabasz", report.calinski_harabasz);
  return j.dump(2) + "\n";
}

ClusterQualityReport parse_cluster_report(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  auto get = [&j](const char* key) -> double {
    const auto& v = j.at(key);
    if (v.is_string()) {
      if (v.get<std::string>() == "inf")
        return std::numeric_limits<double>::infinity();
      throw Error(Errc::malformed_manifest,
                  std::string("unexpected string value for ") + key);
    }
    return v.get<double>();
  };
  ClusterQualityReport r;
  r.intra = get("intra");
  r.inter = get("inter");
  r.ratio = get("ratio");
  r.silhouette = get("silhouette");
  r.davies_bouldin = get("davies_bouldin");
  r.calinski_harabasz = get("calinski_harabasz");
  return r;
}

}  // namespace docclass
