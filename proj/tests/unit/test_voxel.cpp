#include <doctest.h>

#include <algorithm>
#include <map>

#include "ssc/voxel.hpp"
#include "test_util.hpp"

using namespace ssc;

namespace {

GridConfig small_grid() {
    GridConfig cfg;
    cfg.dims = {8, 8, 8};
    cfg.voxel_size = 0.2;
    cfg.origin = {0, 0, 0};
    cfg.num_classes = 4;
    return cfg;
}

}  // namespace

TEST_CASE("world_to_voxel floor semantics") {
    const GridConfig cfg = small_grid();
    const auto at_origin = world_to_voxel({0, 0, 0}, cfg);
    REQUIRE(at_origin.has_value());
    CHECK(*at_origin == VoxelIndex{0, 0, 0});

    // Boundary goes to the higher cell.
    const auto boundary = world_to_voxel({0.2, 0, 0}, cfg);
    REQUIRE(boundary.has_value());
    CHECK(boundary->x == 1);

    CHECK_FALSE(world_to_voxel({-0.01, 0, 0}, cfg).has_value());
    CHECK_FALSE(world_to_voxel({0, 1.6, 0}, cfg).has_value());
}

TEST_CASE("world_to_voxel center reconstruction stays within half a voxel") {
    const GridConfig cfg = small_grid();
    SeededRng rng(3);
    for (int i = 0; i < 500; ++i) {
        const Vec3 p{rng.uniform(0, 1.6), rng.uniform(0, 1.6), rng.uniform(0, 1.6)};
        const auto idx = world_to_voxel(p, cfg);
        REQUIRE(idx.has_value());
        const Vec3 center = voxel_center(*idx, cfg);
        CHECK(std::abs(center.x - p.x) <= cfg.voxel_size / 2 + 1e-12);
        CHECK(std::abs(center.y - p.y) <= cfg.voxel_size / 2 + 1e-12);
        CHECK(std::abs(center.z - p.z) <= cfg.voxel_size / 2 + 1e-12);
    }
}

TEST_CASE("voxelize basics") {
    const GridConfig cfg = small_grid();

    SUBCASE("single point labels one voxel") {
        SemanticPointCloud cloud;
        cloud.push_back({0.3, 0.3, 0.3}, 3);
        const LabelGrid grid = voxelize(cloud, cfg);
        CHECK(grid.at(1, 1, 1) == 3);
        std::size_t occupied = 0;
        for (auto v : grid.labels) occupied += v != 0;
        CHECK(occupied == 1);
    }
    SUBCASE("majority vote") {
        SemanticPointCloud cloud;
        cloud.push_back({0.05, 0.05, 0.05}, 1);
        cloud.push_back({0.10, 0.10, 0.10}, 1);
        cloud.push_back({0.15, 0.15, 0.15}, 2);
        CHECK(voxelize(cloud, cfg).at(0, 0, 0) == 1);
    }
    SUBCASE("tie goes to the smaller class id") {
        SemanticPointCloud cloud;
        cloud.push_back({0.05, 0.05, 0.05}, 2);
        cloud.push_back({0.10, 0.10, 0.10}, 1);
        CHECK(voxelize(cloud, cfg).at(0, 0, 0) == 1);
    }
    SUBCASE("class ids outside [1, C] are rejected") {
        SemanticPointCloud zero_class;
        zero_class.push_back({0.1, 0.1, 0.1}, 0);
        CHECK_THROWS_AS(voxelize(zero_class, cfg), invalid_input);
        SemanticPointCloud too_big;
        too_big.push_back({0.1, 0.1, 0.1}, 5);
        CHECK_THROWS_AS(voxelize(too_big, cfg), invalid_input);
    }
    SUBCASE("out-of-bounds points are skipped") {
        SemanticPointCloud cloud;
        cloud.push_back({-5, 0, 0}, 1);
        const LabelGrid grid = voxelize(cloud, cfg);
        CHECK(std::all_of(grid.labels.begin(), grid.labels.end(),
                          [](std::uint16_t v) { return v == 0; }));
    }
}

TEST_CASE("voxelize equals a counting oracle and is permutation invariant") {
    const GridConfig cfg = small_grid();
    SeededRng rng(17);
    SemanticPointCloud cloud = testutil::random_cloud(rng, 800, cfg.num_classes, 0.9);
    for (auto& c : cloud.coords) {
        c = {std::abs(c.x), std::abs(c.y), std::abs(c.z)};  // keep most points in bounds
    }

    // Independent per-voxel counting.
    std::map<std::size_t, std::map<std::uint16_t, int>> votes;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto idx = world_to_voxel(cloud.coords[i], cfg);
        if (!idx) continue;
        ++votes[cfg.linear(idx->x, idx->y, idx->z)][cloud.classes[i]];
    }
    LabelGrid expected = LabelGrid::empty(cfg);
    for (const auto& [voxel, classes] : votes) {
        std::uint16_t best = 0;
        int best_count = 0;
        for (const auto& [cls, count] : classes) {
            if (count > best_count) {
                best = cls;
                best_count = count;
            }
        }
        expected.labels[voxel] = best;
    }

    const LabelGrid grid = voxelize(cloud, cfg);
    CHECK(grid.labels == expected.labels);

    // Deterministic under permutation.
    SemanticPointCloud shuffled;
    std::vector<std::size_t> order(cloud.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.bounded(i)]);
    }
    for (std::size_t i : order) shuffled.push_back(cloud.coords[i], cloud.classes[i]);
    CHECK(voxelize(shuffled, cfg).labels == grid.labels);
}

TEST_CASE("occupancy_of") {
    const GridConfig cfg = small_grid();

    SUBCASE("all empty") {
        const BoolGrid occ = occupancy_of(LabelGrid::empty(cfg));
        CHECK(std::count(occ.values.begin(), occ.values.end(), 1) == 0);
    }
    SUBCASE("single voxel") {
        LabelGrid grid = LabelGrid::empty(cfg);
        grid.at(2, 3, 4) = 2;
        const BoolGrid occ = occupancy_of(grid);
        CHECK(std::count(occ.values.begin(), occ.values.end(), 1) == 1);
        CHECK(occ.values[cfg.linear(2, 3, 4)] == 1);
    }
    SUBCASE("count matches nonzero labels") {
        SeededRng rng(21);
        LabelGrid grid = LabelGrid::empty(cfg);
        for (auto& v : grid.labels) v = static_cast<std::uint16_t>(rng.bounded(3));
        const BoolGrid occ = occupancy_of(grid);
        const auto nonzero = std::count_if(grid.labels.begin(), grid.labels.end(),
                                           [](std::uint16_t v) { return v != 0; });
        CHECK(std::count(occ.values.begin(), occ.values.end(), 1) == nonzero);
    }
}

TEST_CASE("voxelize occupancy equals the set of voxels hit by in-bounds points") {
    const GridConfig cfg = small_grid();
    SeededRng rng(23);
    SemanticPointCloud cloud = testutil::random_cloud(rng, 300, cfg.num_classes, 1.2);
    const LabelGrid grid = voxelize(cloud, cfg);

    std::vector<std::uint8_t> hit(cfg.voxel_count(), 0);
    for (const Vec3& p : cloud.coords) {
        if (const auto idx = world_to_voxel(p, cfg)) hit[cfg.linear(idx->x, idx->y, idx->z)] = 1;
    }
    const BoolGrid occ = occupancy_of(grid);
    CHECK(occ.values == hit);
}

TEST_CASE("dilate_labels fills empties from the neighborhood majority") {
    const GridConfig cfg = small_grid();
    LabelGrid grid = LabelGrid::empty(cfg);
    grid.at(4, 4, 4) = 2;

    const LabelGrid dilated = dilate_labels(grid, 1);
    CHECK(dilated.at(4, 4, 4) == 2);
    CHECK(dilated.at(3, 4, 4) == 2);
    CHECK(dilated.at(5, 5, 5) == 2);
    CHECK(dilated.at(2, 4, 4) == 0);

    // Occupied voxels never change.
    grid.at(4, 4, 5) = 3;
    const LabelGrid again = dilate_labels(grid, 1);
    CHECK(again.at(4, 4, 5) == 3);
    CHECK(again.at(4, 4, 4) == 2);
}
