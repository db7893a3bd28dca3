#include <doctest.h>

#include <algorithm>

#include "ssc/synthetic.hpp"

using namespace ssc;

TEST_CASE("orbit poses are valid rigid transforms") {
    const SyntheticScene scene = SyntheticScene::desk_default();
    const auto poses = orbit_poses(scene, 8);
    REQUIRE(poses.size() == 8);
    for (const Pose& p : poses) {
        p.validate(1e-9);
        CHECK(p.translation.z == doctest::Approx(2.1));
    }
}

TEST_CASE("rendered frames hit the scene where expected") {
    const SyntheticScene scene = SyntheticScene::desk_default();
    const RenderOptions opts;
    const auto poses = orbit_poses(scene, 8);
    const FrameBundle frame = render_frame(scene, poses[0], opts);

    std::size_t valid = 0;
    for (std::size_t i = 0; i < frame.depth.values.size(); ++i) {
        const float d = frame.depth.values[i];
        if (d > 0.0f) {
            ++valid;
            CHECK(frame.semantics.labels[i] != kIgnoreLabel);
            CHECK(frame.semantics.labels[i] >= 1);
            CHECK(frame.semantics.labels[i] <= 4);
        } else {
            CHECK(frame.semantics.labels[i] == kIgnoreLabel);
        }
    }
    CHECK(valid > frame.depth.values.size() / 4);  // the ground fills much of the view

    // Unprojected hits land on scene surfaces.
    const SemanticPointCloud cloud = unproject_frame(frame, 1);
    std::size_t on_surface = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.coords[i];
        if (cloud.classes[i] == scene.ground_class) {
            if (std::abs(p.z - scene.ground_z) < 1e-3) ++on_surface;
        } else {
            for (const SceneBox& box : scene.boxes) {
                if (box.cls != cloud.classes[i]) continue;
                const double eps = 1e-3;
                const bool inside_slab =
                    p.x > box.min.x - eps && p.x < box.max.x + eps && p.y > box.min.y - eps &&
                    p.y < box.max.y + eps && p.z > box.min.z - eps && p.z < box.max.z + eps;
                if (inside_slab) ++on_surface;
            }
        }
    }
    CHECK(on_surface == cloud.size());
}

TEST_CASE("rendering is deterministic") {
    const SyntheticScene scene = SyntheticScene::desk_default();
    const RenderOptions opts;
    const auto poses = orbit_poses(scene, 2);
    const FrameBundle a = render_frame(scene, poses[1], opts);
    const FrameBundle b = render_frame(scene, poses[1], opts);
    CHECK(a.depth.values == b.depth.values);
    CHECK(a.semantics.labels == b.semantics.labels);
}

TEST_CASE("full ground truth covers the ground layer and box volumes") {
    const SyntheticScene scene = SyntheticScene::desk_default();
    const LabelGrid gt = full_ground_truth(scene);

    const auto ground_idx = world_to_voxel({0.1, 0.1, scene.ground_z}, scene.grid);
    REQUIRE(ground_idx.has_value());
    CHECK(gt.at(0, 0, ground_idx->z) == scene.ground_class);
    CHECK(gt.at(63, 63, ground_idx->z) == scene.ground_class);

    for (const SceneBox& box : scene.boxes) {
        const Vec3 center = (box.min + box.max) * 0.5;
        const auto idx = world_to_voxel(center, scene.grid);
        REQUIRE(idx.has_value());
        CHECK(gt.at(idx->x, idx->y, idx->z) == box.cls);
    }

    // Free space far above the scene stays empty.
    CHECK(gt.at(1, 1, 14) == 0);
}

TEST_CASE("surface ground truth marks only observed voxels") {
    const SyntheticScene scene = SyntheticScene::desk_default();
    const RenderOptions opts;
    const auto poses = orbit_poses(scene, 8);
    std::vector<FrameBundle> frames;
    for (const Pose& p : poses) frames.push_back(render_frame(scene, p, opts));

    const LabelGrid surface = surface_ground_truth(scene, frames);
    REQUIRE(surface.ignore_mask.size() == surface.labels.size());

    const LabelGrid full = full_ground_truth(scene);
    std::size_t observed = 0, agree = 0;
    for (std::size_t i = 0; i < surface.labels.size(); ++i) {
        if (surface.ignore_mask[i]) {
            CHECK(surface.labels[i] == 0);
            continue;
        }
        ++observed;
        CHECK(surface.labels[i] != 0);
        if (surface.labels[i] == full.labels[i]) ++agree;
    }
    CHECK(observed > 1000);
    // Hit-point voxels sit on geometry, so they should agree with the
    // volume labels almost everywhere (cell-boundary faces can differ).
    CHECK(static_cast<double>(agree) / static_cast<double>(observed) > 0.95);
}

TEST_CASE("depth noise perturbs only valid pixels deterministically") {
    const SyntheticScene scene = SyntheticScene::desk_default();
    const RenderOptions opts;
    const auto poses = orbit_poses(scene, 1);
    const FrameBundle clean = render_frame(scene, poses[0], opts);

    DepthNoise noise;
    noise.jitter_sigma = 0.01;
    noise.outlier_fraction = 0.05;
    noise.seed = 9;

    DepthMap a = clean.depth;
    add_depth_noise(a, noise);
    DepthMap b = clean.depth;
    add_depth_noise(b, noise);
    CHECK(a.values == b.values);

    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (clean.depth.values[i] == 0.0f) {
            CHECK(a.values[i] == 0.0f);
        } else {
            CHECK(a.values[i] > 0.0f);
            changed += a.values[i] != clean.depth.values[i];
        }
    }
    CHECK(changed > 0);
}
