#include <cmath>
#include <random>

#include <doctest.h>

#include "docclass/errors.hpp"
#include "docclass/vectorspace.hpp"

using namespace docclass;

namespace {

EmbeddingVector random_nonzero(std::mt19937& rng, std::size_t dim) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  while (true) {
    EmbeddingVector v(dim);
    for (auto& x : v) x = dist(rng);
    if (norm(v) > 1e-3) return v;
  }
}

}  // namespace

TEST_CASE("cosine_distance on the hand fixtures") {
  CHECK(cosine_distance(EmbeddingVector{1, 0}, EmbeddingVector{1, 0}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_distance(EmbeddingVector{1, 0}, EmbeddingVector{0, 1}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_distance(EmbeddingVector{1, 1}, EmbeddingVector{1, 0}) ==
        doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(cosine_distance(EmbeddingVector{1, 1}, EmbeddingVector{1, 0}) ==
        doctest::Approx(0.2928932).epsilon(1e-6));
}

TEST_CASE("cosine_distance rejects bad input") {
  CHECK_THROWS_AS(cosine_distance(EmbeddingVector{1, 0}, EmbeddingVector{1, 0, 0}), Error);
  try {
    cosine_distance(EmbeddingVector{0, 0}, EmbeddingVector{1, 0});
    FAIL("expected ZeroVector");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::zero_vector);
  }
}

TEST_CASE("cosine_distance properties over random vectors") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::size_t dim = 1 + rng() % 16;
    auto a = random_nonzero(rng, dim);
    auto b = random_nonzero(rng, dim);

    CHECK(std::abs(cosine_distance(a, a)) <= 1e-9);
    CHECK(cosine_distance(a, b) == cosine_distance(b, a));

    double d = cosine_distance(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);

    std::uniform_real_distribution<double> scale(0.01, 100.0);
    double lambda = scale(rng);
    EmbeddingVector scaled = a;
    for (auto& x : scaled) x *= lambda;
    CHECK(std::abs(cosine_distance(scaled, b) - d) <= 1e-9);

    EmbeddingVector neg = a;
    for (auto& x : neg) x = -x;
    CHECK(cosine_distance(a, neg) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("centroid basics") {
  CHECK(centroid({{1, 0}, {0, 1}}) == EmbeddingVector{0.5, 0.5});
  CHECK(centroid({{0.25, -3.5}}) == EmbeddingVector{0.25, -3.5});
  // cancellation is allowed here; downstream metrics flag it
  CHECK(centroid({{1, 0}, {-1, 0}}) == EmbeddingVector{0, 0});

  CHECK_THROWS_AS(centroid({}), Error);
  CHECK_THROWS_AS(centroid({{1, 0}, {1, 0, 0}}), Error);
}

TEST_CASE("centroid of k copies is the vector itself") {
  std::mt19937 rng(11);
  for (int i = 0; i < 50; ++i) {
    auto v = random_nonzero(rng, 1 + rng() % 8);
    std::vector<EmbeddingVector> copies(1 + rng() % 7, v);
    auto c = centroid(copies);
    for (std::size_t k = 0; k < v.size(); ++k)
      CHECK(c[k] == doctest::Approx(v[k]).epsilon(1e-12));
  }
}

TEST_CASE("l2_normalize") {
  CHECK(l2_normalize(EmbeddingVector{3, 4}) == EmbeddingVector{0.6, 0.8});
  CHECK(l2_normalize(EmbeddingVector{1, 0}) == EmbeddingVector{1, 0});

  auto r = l2_normalize(EmbeddingVector{2, 2});
  CHECK(r[0] == doctest::Approx(0.7071068).epsilon(1e-6));
  CHECK(r[1] == doctest::Approx(0.7071068).epsilon(1e-6));

  CHECK_THROWS_AS(l2_normalize(EmbeddingVector{0, 0, 0}), Error);

  std::mt19937 rng(13);
  for (int i = 0; i < 100; ++i) {
    auto v = random_nonzero(rng, 1 + rng() % 32);
    CHECK(std::abs(norm(l2_normalize(v)) - 1.0) <= 1e-12);
  }
}
