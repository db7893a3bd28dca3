#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ssc/clues.hpp"
#include "test_util.hpp"

using namespace ssc;

namespace {

FrameBundle tiny_frame(std::uint32_t w, std::uint32_t h) {
    FrameBundle frame;
    frame.depth.width = w;
    frame.depth.height = h;
    frame.depth.values.assign(std::size_t(w) * h, 0.0f);
    frame.semantics.width = w;
    frame.semantics.height = h;
    frame.semantics.labels.assign(std::size_t(w) * h, kIgnoreLabel);
    return frame;
}

// Reference radius filter: O(N^2), inclusive boundary, self excluded.
std::vector<std::size_t> brute_radius_survivors(const SemanticPointCloud& cloud, double r,
                                                int min_neighbors) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        int count = 0;
        for (std::size_t j = 0; j < cloud.size(); ++j) {
            if (i == j) continue;
            if ((cloud.coords[i] - cloud.coords[j]).squared_norm() <= r * r) ++count;
        }
        if (count >= min_neighbors) keep.push_back(i);
    }
    return keep;
}

// Reference statistical filter: O(N^2) neighbor scan sorted by
// (distance^2, index), mean accumulated in that order.
std::vector<std::size_t> brute_sor_survivors(const SemanticPointCloud& cloud, int k,
                                             double alpha) {
    const std::size_t n = cloud.size();
    if (n < 2) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    std::vector<double> mean(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> dists;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dists.emplace_back((cloud.coords[i] - cloud.coords[j]).squared_norm(), j);
        }
        std::sort(dists.begin(), dists.end());
        const std::size_t use = std::min<std::size_t>(k, dists.size());
        double sum = 0.0;
        for (std::size_t t = 0; t < use; ++t) {
            sum += (cloud.coords[dists[t].second] - cloud.coords[i]).norm();
        }
        mean[i] = sum / static_cast<double>(use);
    }
    double mu = 0.0;
    for (double m : mean) mu += m;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double m : mean) var += (m - mu) * (m - mu);
    const double cutoff = mu + alpha * std::sqrt(var / static_cast<double>(n));
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        if (mean[i] <= cutoff) keep.push_back(i);
    }
    return keep;
}

std::vector<std::size_t> survivor_indices(const SemanticPointCloud& input,
                                          const SemanticPointCloud& output) {
    // Filters preserve order, so survivors can be matched greedily.
    std::vector<std::size_t> indices;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        while (cursor < input.size() &&
               ((input.coords[cursor] - output.coords[i]).squared_norm() != 0.0 ||
                input.classes[cursor] != output.classes[i])) {
            ++cursor;
        }
        REQUIRE(cursor < input.size());
        indices.push_back(cursor++);
    }
    return indices;
}

}  // namespace

TEST_CASE("unproject_frame basics") {
    SUBCASE("all-zero depth yields an empty cloud") {
        const FrameBundle frame = tiny_frame(4, 4);
        CHECK(unproject_frame(frame, 1).empty());
    }
    SUBCASE("1x1 frame with identity camera") {
        FrameBundle frame = tiny_frame(1, 1);
        frame.depth.values[0] = 1.0f;
        frame.semantics.labels[0] = 4;
        const SemanticPointCloud cloud = unproject_frame(frame, 1);
        REQUIRE(cloud.size() == 1);
        CHECK(cloud.coords[0].x == doctest::Approx(0.0));
        CHECK(cloud.coords[0].y == doctest::Approx(0.0));
        CHECK(cloud.coords[0].z == doctest::Approx(1.0));
        CHECK(cloud.classes[0] == 4);
    }
    SUBCASE("ignore-label pixels are skipped") {
        FrameBundle frame = tiny_frame(2, 1);
        frame.depth.values = {1.0f, 1.0f};
        frame.semantics.labels = {3, kIgnoreLabel};
        CHECK(unproject_frame(frame, 1).size() == 1);
    }
    SUBCASE("raster dim mismatch is rejected") {
        FrameBundle frame = tiny_frame(2, 2);
        frame.semantics.width = 3;
        frame.semantics.labels.resize(6);
        CHECK_THROWS_AS(unproject_frame(frame, 1), invalid_input);
    }
}

TEST_CASE("unproject_frame matches a per-pixel matrix-inverse oracle") {
    SeededRng rng(41);
    FrameBundle frame = tiny_frame(4, 4);
    frame.cam.intrinsics = {120.0, 110.0, 1.7, 2.2};
    frame.cam.extrinsics = testutil::random_pose(rng, 1.0);
    frame.frame_pose = testutil::random_pose(rng, 3.0);
    for (std::uint32_t i = 0; i < 16; ++i) {
        frame.depth.values[i] = static_cast<float>(rng.uniform(0.5, 20.0));
        frame.semantics.labels[i] = static_cast<std::uint8_t>(1 + rng.bounded(5));
    }
    frame.depth.values[5] = 0.0f;  // one hole

    const SemanticPointCloud cloud = unproject_frame(frame, 1);
    REQUIRE(cloud.size() == 15);

    std::size_t out = 0;
    for (std::uint32_t v = 0; v < 4; ++v) {
        for (std::uint32_t u = 0; u < 4; ++u) {
            const float d = frame.depth.at(u, v);
            if (!(d > 0.0f)) continue;
            const Vec3 expected = frame.frame_pose.apply(
                testutil::oracle_unproject(u, v, static_cast<double>(d), frame.cam));
            CHECK((cloud.coords[out] - expected).norm() < 1e-8);
            CHECK(cloud.classes[out] == frame.semantics.at(u, v));
            ++out;
        }
    }
}

TEST_CASE("unproject_frame honors the stride") {
    FrameBundle frame = tiny_frame(4, 4);
    std::fill(frame.depth.values.begin(), frame.depth.values.end(), 2.0f);
    std::fill(frame.semantics.labels.begin(), frame.semantics.labels.end(),
              static_cast<std::uint8_t>(1));
    CHECK(unproject_frame(frame, 1).size() == 16);
    CHECK(unproject_frame(frame, 2).size() == 4);
    CHECK_THROWS_AS(unproject_frame(frame, 0), invalid_input);
}

TEST_CASE("accumulate_frames") {
    SeededRng rng(43);
    FrameBundle frame = tiny_frame(3, 3);
    frame.frame_pose = testutil::random_pose(rng, 2.0);
    for (std::uint32_t i = 0; i < 9; ++i) {
        frame.depth.values[i] = static_cast<float>(rng.uniform(1.0, 5.0));
        frame.semantics.labels[i] = 2;
    }

    SUBCASE("empty frame list is rejected") {
        CHECK_THROWS_AS(accumulate_frames({}, Pose{}, 1), invalid_input);
    }
    SUBCASE("single frame with its own pose as target reduces to ego coordinates") {
        const std::vector<FrameBundle> frames{frame};
        const SemanticPointCloud acc = accumulate_frames(frames, frame.frame_pose, 1);
        FrameBundle ego = frame;
        ego.frame_pose = Pose{};
        const SemanticPointCloud direct = unproject_frame(ego, 1);
        REQUIRE(acc.size() == direct.size());
        for (std::size_t i = 0; i < acc.size(); ++i) {
            CHECK((acc.coords[i] - direct.coords[i]).norm() < 1e-9);
        }
    }
    SUBCASE("the same frame twice doubles the point count") {
        const std::vector<FrameBundle> frames{frame, frame};
        CHECK(accumulate_frames(frames, Pose{}, 1).size() == 18);
    }
    SUBCASE("translated second frame lands shifted in the target frame") {
        FrameBundle second = frame;
        second.frame_pose = frame.frame_pose;
        second.frame_pose.translation = second.frame_pose.translation + Vec3{1, 0, 0};
        const std::vector<FrameBundle> frames{frame, second};
        const SemanticPointCloud acc = accumulate_frames(frames, frame.frame_pose, 1);
        REQUIRE(acc.size() == 18);
        // Second frame's points = first frame's points + R_target^-1 (1,0,0).
        const Vec3 shift = invert_pose(frame.frame_pose).rotation * Vec3{1, 0, 0};
        for (std::size_t i = 0; i < 9; ++i) {
            CHECK((acc.coords[9 + i] - acc.coords[i] - shift).norm() < 1e-9);
        }
    }
}

TEST_CASE("split_by_class") {
    SUBCASE("empty cloud") { CHECK(split_by_class(SemanticPointCloud{}).empty()); }
    SUBCASE("single class") {
        SemanticPointCloud cloud;
        cloud.push_back({1, 2, 3}, 5);
        cloud.push_back({4, 5, 6}, 5);
        const auto parts = split_by_class(cloud);
        REQUIRE(parts.size() == 1);
        CHECK(parts.at(5).size() == 2);
    }
    SUBCASE("mixed cloud matches a histogram oracle") {
        SeededRng rng(47);
        const SemanticPointCloud cloud = testutil::random_cloud(rng, 300, 6);
        std::map<std::uint16_t, int> histogram;
        for (auto c : cloud.classes) ++histogram[c];
        const auto parts = split_by_class(cloud);
        std::size_t total = 0;
        for (const auto& [cls, part] : parts) {
            CHECK(static_cast<int>(part.size()) == histogram[cls]);
            for (auto c : part.classes) CHECK(c == cls);
            total += part.size();
        }
        CHECK(total == cloud.size());
    }
}

TEST_CASE("radius_filter basics") {
    SUBCASE("empty cloud") { CHECK(radius_filter(SemanticPointCloud{}, 1.0, 1).empty()); }
    SUBCASE("a lone point has no self-neighbor") {
        SemanticPointCloud cloud;
        cloud.push_back({0, 0, 0}, 1);
        CHECK(radius_filter(cloud, 1.0, 1).empty());
    }
    SUBCASE("three collinear points keep only the middle") {
        SemanticPointCloud cloud;
        cloud.push_back({0, 0, 0}, 1);
        cloud.push_back({1, 0, 0}, 1);
        cloud.push_back({2, 0, 0}, 1);
        const SemanticPointCloud out = radius_filter(cloud, 1.5, 2);
        REQUIRE(out.size() == 1);
        CHECK(out.coords[0].x == 1.0);
    }
}

TEST_CASE("filters equal the brute-force oracle on random clouds") {
    SeededRng rng(53);
    for (int iter = 0; iter < 10; ++iter) {
        const SemanticPointCloud cloud = testutil::random_cloud(rng, 200 + rng.bounded(200), 3, 1.2);
        const double r = rng.uniform(0.1, 0.8);
        const int mn = 1 + static_cast<int>(rng.bounded(6));
        const auto got = survivor_indices(cloud, radius_filter(cloud, r, mn));
        CHECK(got == brute_radius_survivors(cloud, r, mn));

        const int k = 1 + static_cast<int>(rng.bounded(12));
        const double alpha = rng.uniform(0.5, 2.5);
        const auto got_sor = survivor_indices(cloud, statistical_filter(cloud, k, alpha));
        CHECK(got_sor == brute_sor_survivors(cloud, k, alpha));
    }
}

TEST_CASE("statistical_filter basics") {
    SUBCASE("two points are always retained") {
        SemanticPointCloud cloud;
        cloud.push_back({0, 0, 0}, 1);
        cloud.push_back({3, 0, 0}, 1);
        CHECK(statistical_filter(cloud, 1, 1.0).size() == 2);
    }
    SUBCASE("empty and singleton pass through") {
        CHECK(statistical_filter(SemanticPointCloud{}, 3, 1.0).empty());
        SemanticPointCloud one;
        one.push_back({1, 1, 1}, 2);
        CHECK(statistical_filter(one, 3, 1.0).size() == 1);
    }
    SUBCASE("a far outlier is removed from a tight cluster") {
        SeededRng rng(59);
        SemanticPointCloud cloud;
        for (int i = 0; i < 10; ++i) {
            cloud.push_back({rng.uniform(0, 0.1), rng.uniform(0, 0.1), rng.uniform(0, 0.1)}, 1);
        }
        cloud.push_back({10, 10, 10}, 1);
        const SemanticPointCloud out = statistical_filter(cloud, 3, 1.0);
        CHECK(out.size() == 10);
        for (const Vec3& p : out.coords) CHECK(p.x < 1.0);
        CHECK(survivor_indices(cloud, out) == brute_sor_survivors(cloud, 3, 1.0));
    }
}

TEST_CASE("filters are subsetting and re-running never grows the result") {
    SeededRng rng(61);
    const SemanticPointCloud cloud = testutil::random_cloud(rng, 400, 2, 1.0);
    const SemanticPointCloud once = radius_filter(cloud, 0.3, 3);
    CHECK(once.size() <= cloud.size());
    const SemanticPointCloud twice = radius_filter(once, 0.3, 3);
    CHECK(twice.size() <= once.size());

    const SemanticPointCloud sor = statistical_filter(cloud, 8, 1.5);
    CHECK(sor.size() <= cloud.size());
}

TEST_CASE("per-class filtering is isolated across classes") {
    // A lone class-2 point inside a dense class-1 cluster: its class has no
    // neighbors, so it must not survive the per-class radius filter.
    SeededRng rng(67);
    SemanticPointCloud cloud;
    for (int i = 0; i < 30; ++i) {
        cloud.push_back({rng.uniform(0, 0.2), rng.uniform(0, 0.2), rng.uniform(0, 0.2)}, 1);
    }
    cloud.push_back({0.1, 0.1, 0.1}, 2);

    auto parts = split_by_class(cloud);
    const auto kept1 = radius_filter(parts.at(1), 0.4, 2);
    const auto kept2 = radius_filter(parts.at(2), 0.4, 2);
    CHECK(kept1.size() == 30);
    CHECK(kept2.empty());
}

TEST_CASE("generate_clues") {
    GridConfig grid;
    grid.dims = {16, 16, 8};
    grid.voxel_size = 0.5;
    grid.origin = {-4, -4, 0};
    grid.num_classes = 5;

    SUBCASE("permissive filters reduce to voxelized unprojection") {
        FrameBundle frame = tiny_frame(4, 4);
        // Duplicate every pixel's point by stacking the frame twice.
        for (std::uint32_t i = 0; i < 16; ++i) {
            frame.depth.values[i] = 1.0f + 0.1f * static_cast<float>(i % 4);
            frame.semantics.labels[i] = static_cast<std::uint8_t>(1 + i % 3);
        }
        const std::vector<FrameBundle> frames{frame, frame};
        FilterConfig permissive;
        permissive.radius = 0.4;
        permissive.min_neighbors = 1;
        permissive.sor_k = 1;
        permissive.sor_alpha = 1e9;

        const LabelGrid clues = generate_clues(frames, Pose{}, grid, permissive, 1);
        const LabelGrid direct = voxelize(accumulate_frames(frames, Pose{}, 1), grid);
        CHECK(clues.labels == direct.labels);
    }
    SUBCASE("everything filtered out leaves an empty grid") {
        FrameBundle frame = tiny_frame(1, 1);
        frame.depth.values[0] = 1.0f;
        frame.semantics.labels[0] = 1;
        const std::vector<FrameBundle> frames{frame};
        FilterConfig strict;
        strict.min_neighbors = 5;
        const LabelGrid clues = generate_clues(frames, Pose{}, grid, strict, 1);
        CHECK(std::all_of(clues.labels.begin(), clues.labels.end(),
                          [](std::uint16_t v) { return v == 0; }));
    }
    SUBCASE("matches the hand-composed stage pipeline exactly") {
        SeededRng rng(71);
        std::vector<FrameBundle> frames;
        for (int f = 0; f < 2; ++f) {
            FrameBundle frame = tiny_frame(8, 6);
            frame.cam.intrinsics = {30, 30, 3.5, 2.5};
            frame.frame_pose = testutil::random_pose(rng, 0.5);
            for (std::uint32_t i = 0; i < 48; ++i) {
                frame.depth.values[i] = static_cast<float>(rng.uniform(0.5, 4.0));
                frame.semantics.labels[i] = static_cast<std::uint8_t>(1 + rng.bounded(3));
            }
            frames.push_back(frame);
        }
        const Pose target = frames[1].frame_pose;
        FilterConfig filter;
        filter.radius = 0.5;
        filter.min_neighbors = 2;
        filter.sor_k = 4;
        filter.sor_alpha = 1.5;

        // Stage-by-stage oracle.
        const SemanticPointCloud acc = accumulate_frames(frames, target, 1);
        SemanticPointCloud merged;
        for (auto& [cls, part] : split_by_class(acc)) {
            merged.append(statistical_filter(radius_filter(part, filter.radius, filter.min_neighbors),
                                             filter.sor_k, filter.sor_alpha));
        }
        const LabelGrid expected = voxelize(merged, grid);
        const LabelGrid got = generate_clues(frames, target, grid, filter, 1);
        CHECK(got.labels == expected.labels);
    }
}

TEST_CASE("clue pipeline is invariant to point enumeration order") {
    SeededRng rng(73);
    const SemanticPointCloud cloud = testutil::random_cloud(rng, 300, 3, 1.5);

    GridConfig grid;
    grid.dims = {16, 16, 16};
    grid.voxel_size = 0.25;
    grid.origin = {-2, -2, -2};
    grid.num_classes = 3;
    FilterConfig filter;
    filter.radius = 0.4;
    filter.min_neighbors = 2;
    filter.sor_k = 4;
    filter.sor_alpha = 2.0;

    const auto run = [&](const SemanticPointCloud& input) {
        SemanticPointCloud merged;
        for (auto& [cls, part] : split_by_class(input)) {
            merged.append(statistical_filter(
                radius_filter(part, filter.radius, filter.min_neighbors), filter.sor_k,
                filter.sor_alpha));
        }
        return voxelize(merged, grid);
    };

    SemanticPointCloud shuffled;
    std::vector<std::size_t> order(cloud.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.bounded(i)]);
    for (std::size_t i : order) shuffled.push_back(cloud.coords[i], cloud.classes[i]);

    CHECK(run(cloud).labels == run(shuffled).labels);
}
