#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssc/clues.hpp"
#include "ssc/voxel.hpp"

namespace ssc {

struct SceneBox {
    Vec3 min, max;
    std::uint16_t cls = 2;
};

// Procedural scene: a ground plane plus axis-aligned boxes, rendered
// analytically by ray casting. Geometry is kept off voxel boundaries so
// discretization is stable under float32 depth storage.
struct SyntheticScene {
    double ground_z = 0.05;
    std::uint16_t ground_class = 1;
    std::vector<SceneBox> boxes;
    GridConfig grid;

    // 12.8 m x 12.8 m x 3.2 m at 0.2 m voxels, three boxes of classes 2-4.
    static SyntheticScene desk_default();
};

struct RenderOptions {
    std::uint32_t width = 64, height = 48;
    CameraIntrinsics intrinsics{40.0, 40.0, 31.5, 23.5};
};

// Multiplicative depth corruption: Gaussian jitter on every valid pixel and
// a seeded fraction of pixels rescaled into free space.
struct DepthNoise {
    double jitter_sigma = 0.0;      // relative sigma on all valid pixels
    double outlier_fraction = 0.0;  // fraction of valid pixels turned into floaters
    double outlier_scale_lo = 0.4;
    double outlier_scale_hi = 0.8;
    std::uint64_t seed = 1;
};

// Ray-casts the scene from a camera-to-world pose. Missed pixels carry the
// zero-depth sentinel and the ignore label.
FrameBundle render_frame(const SyntheticScene& scene, const Pose& cam_to_world,
                         const RenderOptions& options);

// `count` poses on a circle around the scene center looking inward.
std::vector<Pose> orbit_poses(const SyntheticScene& scene, int count);

// Volume ground truth: every voxel intersecting scene geometry gets its
// class (boxes override ground); everything else is empty.
LabelGrid full_ground_truth(const SyntheticScene& scene);

// Surface ground truth: majority class of the rendered hit points per
// voxel, computed by direct per-pixel unprojection independent of the clue
// pipeline; voxels no camera observed are flagged in the ignore mask.
LabelGrid surface_ground_truth(const SyntheticScene& scene, std::span<const FrameBundle> frames);

void add_depth_noise(DepthMap& depth, const DepthNoise& noise);

}  // namespace ssc
