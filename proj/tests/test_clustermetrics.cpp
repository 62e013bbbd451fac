#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "docclass/clustermetrics.hpp"
#include "docclass/errors.hpp"
#include "oracle.hpp"

using namespace docclass;

namespace {

// The two-class square fixture: A on +x/+y, B antipodal.
LabeledEmbeddingSet square_set() {
  return LabeledEmbeddingSet({{"d1", "A", {1, 0}},
                              {"d2", "A", {0, 1}},
                              {"d3", "B", {-1, 0}},
                              {"d4", "B", {0, -1}}});
}

std::vector<LabeledEmbeddingSet::Item> random_items(std::mt19937& rng) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::size_t classes = 2 + rng() % 4;   // 2..5
  std::size_t dim = 2 + rng() % 7;       // 2..8
  std::size_t n = classes + rng() % (41 - classes);
  std::vector<LabeledEmbeddingSet::Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    std::string label = "c" + std::to_string(i < classes ? i : rng() % classes);
    EmbeddingVector v(dim);
    double nrm = 0;
    do {
      for (auto& x : v) x = coord(rng);
      nrm = 0;
      for (double x : v) nrm += x * x;
    } while (std::sqrt(nrm) < 1e-3);
    items.push_back({"d" + std::to_string(i), label, v});
  }
  return items;
}

std::vector<oracle::Point> to_oracle(const std::vector<LabeledEmbeddingSet::Item>& items) {
  std::vector<oracle::Point> pts;
  for (const auto& it : items) pts.push_back({it.label, it.vector});
  return pts;
}

constexpr double kInvSqrt2Dist = 0.29289321881345254;  // 1 - 1/sqrt(2)

}  // namespace

TEST_CASE("intra_distance") {
  SUBCASE("identical members per class give zero") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {1, 0}},
                             {"d3", "B", {0, 1}},
                             {"d4", "B", {0, 1}}});
    auto [overall, per_class] = intra_distance(set);
    CHECK(overall == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(per_class.at("A") == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("square fixture") {
    auto [overall, per_class] = intra_distance(square_set());
    CHECK(overall == doctest::Approx(kInvSqrt2Dist).epsilon(1e-7));
    CHECK(per_class.at("A") == doctest::Approx(kInvSqrt2Dist).epsilon(1e-7));
    CHECK(per_class.at("B") == doctest::Approx(kInvSqrt2Dist).epsilon(1e-7));
  }
  SUBCASE("single-member classes give zero") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}}, {"d2", "B", {0, 1}}});
    auto [overall, per_class] = intra_distance(set);
    CHECK(overall == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("cancelled centroid is an error") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {-1, 0}},
                             {"d3", "B", {0, 1}}});
    CHECK_THROWS_AS(intra_distance(set), Error);
    try {
      intra_distance(set);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::degenerate_centroid);
      CHECK(e.context() == "A");
    }
  }
}

TEST_CASE("inter_distance") {
  SUBCASE("coincident centroids give zero") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {0, 1}},
                             {"d3", "B", {1, 0}},
                             {"d4", "B", {0, 1}}});
    CHECK(inter_distance(set) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("square fixture has antipodal centroids") {
    CHECK(inter_distance(square_set()) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("three mutually orthogonal centroids") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0, 0}},
                             {"d2", "B", {0, 1, 0}},
                             {"d3", "C", {0, 0, 1}}});
    CHECK(inter_distance(set) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("one class is too few") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}}, {"d2", "A", {0, 1}}});
    CHECK_THROWS_AS(inter_distance(set), Error);
  }
}

TEST_CASE("silhouette") {
  SUBCASE("square fixture") {
    CHECK(silhouette(square_set()) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(silhouette(square_set()) == doctest::Approx(0.3333333).epsilon(1e-6));
  }
  SUBCASE("duplicated classes score at most zero") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {0, 1}},
                             {"d3", "B", {1, 0}},
                             {"d4", "B", {0, 1}}});
    CHECK(silhouette(set) <= 0.0);
  }
  SUBCASE("tight well-separated clusters score one") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {1, 0}},
                             {"d3", "B", {0, 1}},
                             {"d4", "B", {0, 1}}});
    CHECK(silhouette(set) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("davies_bouldin") {
  SUBCASE("zero scatter gives zero") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {1, 0}},
                             {"d3", "B", {0, 1}},
                             {"d4", "B", {0, 1}}});
    CHECK(davies_bouldin(set) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("square fixture") {
    CHECK(davies_bouldin(square_set()) == doctest::Approx(kInvSqrt2Dist).epsilon(1e-7));
  }
  SUBCASE("coincident centroids give the +inf sentinel") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {0, 1}},
                             {"d3", "B", {1, 0}},
                             {"d4", "B", {0, 1}}});
    CHECK(std::isinf(davies_bouldin(set)));
  }
}

TEST_CASE("calinski_harabasz") {
  SUBCASE("square fixture") {
    CHECK(calinski_harabasz(square_set()) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("zero within-class variance gives the +inf sentinel") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {1, 0}},
                             {"d3", "B", {0, 1}},
                             {"d4", "B", {0, 1}}});
    CHECK(std::isinf(calinski_harabasz(set)));
  }
  SUBCASE("all points identical across classes scores zero") {
    LabeledEmbeddingSet set({{"d1", "A", {1, 0}},
                             {"d2", "A", {1, 0}},
                             {"d3", "B", {1, 0}},
                             {"d4", "B", {1, 0}}});
    CHECK(calinski_harabasz(set) == 0.0);
  }
}

TEST_CASE("cluster_report composes the metrics") {
  ClusterQualityReport r = cluster_report(square_set());
  CHECK(r.intra == doctest::Approx(0.292893).epsilon(1e-5));
  CHECK(r.inter == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.ratio == doctest::Approx(6.828427).epsilon(1e-5));
  CHECK(r.silhouette == doctest::Approx(0.333333).epsilon(1e-5));
  CHECK(r.davies_bouldin == doctest::Approx(0.292893).epsilon(1e-5));
  CHECK(r.calinski_harabasz == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.per_class_intra.size() == 2);

  LabeledEmbeddingSet single({{"d1", "A", {1, 0}}, {"d2", "A", {0, 1}}});
  CHECK_THROWS_AS(cluster_report(single), Error);
}

TEST_CASE("report serialization uses exactly the six keys and inf strings") {
  ClusterQualityReport r = cluster_report(square_set());
  std::string json = serialize_cluster_report(r);
  for (const char* key : {"\"intra\"", "\"inter\"", "\"ratio\"", "\"silhouette\"",
                          "\"davies_bouldin\"", "\"calinski_harabasz\""})
    CHECK(json.find(key) != std::string::npos);
  CHECK(json.find("per_class") == std::string::npos);

  ClusterQualityReport back = parse_cluster_report(json);
  CHECK(back.intra == r.intra);
  CHECK(back.calinski_harabasz == r.calinski_harabasz);

  r.davies_bouldin = std::numeric_limits<double>::infinity();
  std::string with_inf = serialize_cluster_report(r);
  CHECK(with_inf.find("\"davies_bouldin\": \"inf\"") != std::string::npos);
  CHECK(std::isinf(parse_cluster_report(with_inf).davies_bouldin));
}

TEST_CASE("permutation and relabeling leave the metrics unchanged") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    auto items = random_items(rng);
    ClusterQualityReport base = cluster_report(LabeledEmbeddingSet(items));

    auto shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ClusterQualityReport perm = cluster_report(LabeledEmbeddingSet(shuffled));
    CHECK(std::abs(perm.intra - base.intra) <= 1e-9);
    CHECK(std::abs(perm.inter - base.inter) <= 1e-9);
    CHECK(std::abs(perm.silhouette - base.silhouette) <= 1e-9);
    CHECK(std::abs(perm.davies_bouldin - base.davies_bouldin) <= 1e-9);
    CHECK(std::abs(perm.calinski_harabasz - base.calinski_harabasz) <= 1e-9);

    auto renamed = items;
    for (auto& it : renamed) it.label = "zz_" + it.label;  // bijective rename
    ClusterQualityReport ren = cluster_report(LabeledEmbeddingSet(renamed));
    CHECK(std::abs(ren.intra - base.intra) <= 1e-9);
    CHECK(std::abs(ren.davies_bouldin - base.davies_bouldin) <= 1e-9);
  }
}

TEST_CASE("per-vector scaling after normalize-on-receipt changes nothing") {
  std::mt19937 rng(303);
  auto items = random_items(rng);
  auto normalized = items;
  for (auto& it : normalized) it.vector = l2_normalize(it.vector);
  auto scaled = items;
  for (auto& it : scaled) {
    for (auto& x : it.vector) x *= 7.3;  // raw provider output scaling
    it.vector = l2_normalize(it.vector);
  }
  ClusterQualityReport a = cluster_report(LabeledEmbeddingSet(normalized));
  ClusterQualityReport b = cluster_report(LabeledEmbeddingSet(scaled));
  CHECK(std::abs(a.intra - b.intra) <= 1e-9);
  CHECK(std::abs(a.inter - b.inter) <= 1e-9);
  CHECK(std::abs(a.silhouette - b.silhouette) <= 1e-9);
  CHECK(std::abs(a.davies_bouldin - b.davies_bouldin) <= 1e-9);
  CHECK(std::abs(a.calinski_harabasz - b.calinski_harabasz) <= 1e-9);
}

TEST_CASE("brute-force oracle agreement on random sets") {
  // matching +inf sentinels count as agreement
  auto close = [](double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= 1e-9;
  };
  std::mt19937 rng(202);
  for (int trial = 0; trial < 20; ++trial) {
    auto items = random_items(rng);
    LabeledEmbeddingSet set(items);
    auto pts = to_oracle(items);

    auto [overall, per_class] = intra_distance(set);
    CHECK(close(overall, oracle::intra(pts)));
    CHECK(close(inter_distance(set), oracle::inter(pts)));
    CHECK(close(silhouette(set), oracle::silhouette(pts)));
    CHECK(close(davies_bouldin(set), oracle::davies_bouldin(pts)));
    CHECK(close(calinski_harabasz(set), oracle::calinski_harabasz(pts)));
  }
}

TEST_CASE("metric ranges hold on random sets") {
  std::mt19937 rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    LabeledEmbeddingSet set(random_items(rng));
    ClusterQualityReport r = cluster_report(set);
    CHECK(r.intra >= 0.0);
    CHECK(r.inter >= 0.0);
    CHECK(r.inter <= 2.0);
    CHECK(r.silhouette >= -1.0);
    CHECK(r.silhouette <= 1.0);
    CHECK(r.davies_bouldin >= 0.0);
    CHECK(r.calinski_harabasz >= 0.0);
  }
}
