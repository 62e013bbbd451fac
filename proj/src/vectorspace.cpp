#include "docclass/vectorspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "docclass/errors.hpp"

namespace docclass {

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(Errc::dimension_mismatch,
                "cosine over dims " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0)
    throw Error(Errc::zero_vector, "cosine of zero-norm vector");
  // identical vectors compare at exactly 1 so self-distances and coincident
  // centroids are exact zeros, not 1-ulp residue
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  return dot(a, b) / (na * nb);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double d = 1.0 - cosine_similarity(a, b);
  return std::clamp(d, 0.0, 2.0);
}

EmbeddingVector centroid(const std::vector<EmbeddingVector>& vectors) {
  if (vectors.empty()) throw Error(Errc::empty_input, "centroid of no vectors");
  const std::size_t dim = vectors.front().size();
  EmbeddingVector mean(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim)
      throw Error(Errc::dimension_mismatch, "centroid over mixed dims");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(vectors.size());
  for (double& x : mean) x *= inv;
  return mean;
}

EmbeddingVector l2_normalize(std::span<const double> v) {
  double n = norm(v);
  if (n == 0.0) throw Error(Errc::zero_vector, "normalize of zero-norm vector");
  EmbeddingVector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw Error(Errc::invalid_request,
                  std::string(what) + " contains a non-finite component");
  }
}

}  // namespace docclass
