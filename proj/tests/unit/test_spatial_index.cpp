#include <doctest.h>

#include <algorithm>

#include "ssc/spatial_index.hpp"
#include "test_util.hpp"

using namespace ssc;

namespace {

// O(N^2) reference with the same tie rules: inclusive radius, k-nearest by
// (distance, index).
std::vector<std::size_t> brute_radius(const std::vector<Vec3>& pts, const Vec3& center, double r,
                                      std::optional<std::size_t> exclude) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (exclude && i == *exclude) continue;
        if ((pts[i] - center).squared_norm() <= r * r) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts, const Vec3& center, std::size_t k,
                                   std::optional<std::size_t> exclude) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (exclude && i == *exclude) continue;
        all.emplace_back((pts[i] - center).squared_norm(), i);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
    return out;
}

}  // namespace

TEST_CASE("radius query boundary semantics") {
    const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}};
    const SpatialIndex index(pts);
    CHECK(index.radius_query({0, 0, 0}, 0.5, 0).empty());
    const auto hit = index.radius_query({0, 0, 0}, 1.0, 0);  // boundary inclusive
    REQUIRE(hit.size() == 1);
    CHECK(hit[0] == 1);
}

TEST_CASE("self exclusion keeps duplicates") {
    const std::vector<Vec3> pts{{1, 1, 1}, {1, 1, 1}};
    const SpatialIndex index(pts);
    const auto n0 = index.radius_query({1, 1, 1}, 0.1, 0);
    REQUIRE(n0.size() == 1);
    CHECK(n0[0] == 1);
    CHECK(index.radius_query({1, 1, 1}, 0.1).size() == 2);
}

TEST_CASE("knn ordering and shortfall") {
    const std::vector<Vec3> pts{{0, 0, 0}, {2, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    const SpatialIndex index(pts);
    const auto nn = index.knn_query({0, 0, 0}, 2, 0);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0] == 2);
    CHECK(nn[1] == 1);
    CHECK(index.knn_query({0, 0, 0}, 10, 0).size() == 3);
    CHECK(index.knn_query({0, 0, 0}, 0).empty());
}

TEST_CASE("knn distance ties break to the smaller index") {
    // Four points at identical distance from the center.
    const std::vector<Vec3> pts{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    const SpatialIndex index(pts);
    const auto nn = index.knn_query({0, 0, 0}, 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0] == 0);
    CHECK(nn[1] == 1);
}

TEST_CASE("queries equal the brute-force scan on random clouds") {
    SeededRng rng(31);
    const auto cloud = testutil::random_cloud(rng, 500, 3, 2.0);
    const SpatialIndex index(cloud.coords);

    for (std::size_t i = 0; i < cloud.size(); i += 7) {
        const double r = rng.uniform(0.05, 1.5);
        CHECK(index.radius_query(cloud.coords[i], r, i) ==
              brute_radius(cloud.coords, cloud.coords[i], r, i));
        const std::size_t k = 1 + rng.bounded(20);
        CHECK(index.knn_query(cloud.coords[i], k, i) ==
              brute_knn(cloud.coords, cloud.coords[i], k, i));
    }

    // External query centers too.
    for (int i = 0; i < 50; ++i) {
        const Vec3 center{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5)};
        const double r = rng.uniform(0.05, 2.0);
        CHECK(index.radius_query(center, r) == brute_radius(cloud.coords, center, r, {}));
        CHECK(index.knn_query(center, 5) == brute_knn(cloud.coords, center, 5, {}));
    }
}

TEST_CASE("empty and tiny point sets") {
    const SpatialIndex empty(std::vector<Vec3>{});
    CHECK(empty.radius_query({0, 0, 0}, 1.0).empty());
    CHECK(empty.knn_query({0, 0, 0}, 3).empty());

    const SpatialIndex one(std::vector<Vec3>{{1, 2, 3}});
    CHECK(one.knn_query({0, 0, 0}, 3) == std::vector<std::size_t>{0});
    CHECK(one.radius_query({1, 2, 3}, 0.1, 0).empty());
}
