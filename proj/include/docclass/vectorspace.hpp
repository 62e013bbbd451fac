#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace docclass {

// Dense embedding vector. All components must be finite; vectors compared
// against each other must share the same dimension.
using EmbeddingVector = std::vector<double>;

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

// 1 - (a.b)/(|a||b|), clamped to [0, 2] against floating-point drift.
// Throws DimensionMismatch when dims differ, ZeroVector when either norm is 0.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// (a.b)/(|a||b|); same preconditions as cosine_distance.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Componentwise arithmetic mean. Throws EmptyInput / DimensionMismatch.
// A cancelled (zero-norm) mean is returned as-is; callers that need a
// direction flag it as DegenerateCentroid.
EmbeddingVector centroid(const std::vector<EmbeddingVector>& vectors);

// v / |v|. Throws ZeroVector.
EmbeddingVector l2_normalize(std::span<const double> v);

// Guards NaN/inf components; used when vectors cross a trust boundary
// (provider responses, artifact files).
void check_finite(std::span<const double> v, const char* what);

}  // namespace docclass
