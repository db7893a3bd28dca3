#include "ssc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ssc/rng.hpp"

namespace ssc {

SyntheticScene SyntheticScene::desk_default() {
    SyntheticScene scene;
    scene.grid.dims = {64, 64, 16};
    scene.grid.voxel_size = 0.2;
    scene.grid.origin = {0.0, 0.0, 0.0};
    scene.grid.num_classes = 4;
    scene.boxes = {
        {{5.23, 5.23, 0.05}, {6.17, 6.17, 1.03}, 2},
        {{7.03, 6.63, 0.05}, {7.83, 7.43, 0.83}, 3},
        {{5.63, 7.23, 0.05}, {6.43, 7.97, 0.63}, 4},
    };
    return scene;
}

namespace {

struct Hit {
    double t = 0.0;  // camera-frame depth (ray parameterized by z = 1)
    std::uint16_t cls = 0;
    bool valid = false;
};

// Slab intersection against an axis-aligned box; direction components may
// be zero. Returns the entry parameter, or misses when the entry is not in
// front of the camera.
bool ray_box(const Vec3& origin, const Vec3& dir, const SceneBox& box, double& t_enter) {
    double t0 = 0.0, t1 = 1e300;
    const double o[3] = {origin.x, origin.y, origin.z};
    const double d[3] = {dir.x, dir.y, dir.z};
    const double lo[3] = {box.min.x, box.min.y, box.min.z};
    const double hi[3] = {box.max.x, box.max.y, box.max.z};
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) return false;
            continue;
        }
        double ta = (lo[a] - o[a]) / d[a];
        double tb = (hi[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    if (t0 <= 1e-9) return false;  // origin inside or behind
    t_enter = t0;
    return true;
}

Hit cast_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir) {
    Hit best;
    if (dir.z != 0.0) {
        const double t = (scene.ground_z - origin.z) / dir.z;
        if (t > 1e-9) {
            best = {t, scene.ground_class, true};
        }
    }
    for (const SceneBox& box : scene.boxes) {
        double t = 0.0;
        if (ray_box(origin, dir, box, t) && (!best.valid || t < best.t)) {
            best = {t, box.cls, true};
        }
    }
    return best;
}

}  // namespace

FrameBundle render_frame(const SyntheticScene& scene, const Pose& cam_to_world,
                         const RenderOptions& options) {
    FrameBundle frame;
    frame.cam.intrinsics = options.intrinsics;
    frame.cam.extrinsics = Pose{};  // identity: pixels unproject straight to ego
    frame.frame_pose = cam_to_world;

    frame.depth.width = options.width;
    frame.depth.height = options.height;
    frame.depth.values.assign(std::size_t(options.width) * options.height, 0.0f);
    frame.semantics.width = options.width;
    frame.semantics.height = options.height;
    frame.semantics.labels.assign(std::size_t(options.width) * options.height, kIgnoreLabel);

    const CameraIntrinsics& k = options.intrinsics;
    for (std::uint32_t v = 0; v < options.height; ++v) {
        for (std::uint32_t u = 0; u < options.width; ++u) {
            // Camera-frame ray with unit z so the hit parameter is the depth.
            const Vec3 dir_cam{(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
            const Vec3 dir_world = cam_to_world.rotation * dir_cam;
            const Hit hit = cast_ray(scene, cam_to_world.translation, dir_world);
            if (!hit.valid) continue;
            frame.depth.at(u, v) = static_cast<float>(hit.t);
            frame.semantics.at(u, v) = static_cast<std::uint8_t>(hit.cls);
        }
    }
    return frame;
}

std::vector<Pose> orbit_poses(const SyntheticScene& scene, int count) {
    const Vec3 extent{scene.grid.dims.h * scene.grid.voxel_size,
                      scene.grid.dims.w * scene.grid.voxel_size,
                      scene.grid.dims.z * scene.grid.voxel_size};
    const Vec3 center = scene.grid.origin + extent * 0.5;
    const Vec3 look_at{center.x, center.y, 0.5};
    const double radius = 0.78 * std::min(extent.x, extent.y) * 0.5;

    std::vector<Pose> poses;
    for (int i = 0; i < count; ++i) {
        const double theta = 2.0 * 3.14159265358979323846 * i / count + 0.37;
        const Vec3 eye{center.x + radius * std::cos(theta), center.y + radius * std::sin(theta),
                       2.1};
        // Camera convention: +z forward, +y down.
        Vec3 fwd = look_at - eye;
        fwd = fwd * (1.0 / fwd.norm());
        Vec3 right = cross(fwd, Vec3{0, 0, 1});
        right = right * (1.0 / right.norm());
        const Vec3 down = cross(fwd, right);

        Pose pose;
        pose.rotation(0, 0) = right.x;
        pose.rotation(1, 0) = right.y;
        pose.rotation(2, 0) = right.z;
        pose.rotation(0, 1) = down.x;
        pose.rotation(1, 1) = down.y;
        pose.rotation(2, 1) = down.z;
        pose.rotation(0, 2) = fwd.x;
        pose.rotation(1, 2) = fwd.y;
        pose.rotation(2, 2) = fwd.z;
        pose.translation = eye;
        pose.rotation = nearest_rotation(pose.rotation);
        poses.push_back(pose);
    }
    return poses;
}

LabelGrid full_ground_truth(const SyntheticScene& scene) {
    LabelGrid grid = LabelGrid::empty(scene.grid);
    const GridConfig& cfg = scene.grid;
    const double s = cfg.voxel_size;

    // Ground plane: one voxel layer.
    const auto ground_idx = world_to_voxel({cfg.origin.x, cfg.origin.y, scene.ground_z}, cfg);
    if (ground_idx) {
        for (std::int32_t x = 0; x < cfg.dims.h; ++x) {
            for (std::int32_t y = 0; y < cfg.dims.w; ++y) {
                grid.at(x, y, ground_idx->z) = scene.ground_class;
            }
        }
    }

    // Boxes override ground: every voxel whose cell intersects the box.
    for (const SceneBox& box : scene.boxes) {
        const auto cell = [&](double world, double origin) {
            return static_cast<std::int32_t>(std::floor((world - origin) / s));
        };
        const std::int32_t x0 = std::max(cell(box.min.x, cfg.origin.x), 0);
        const std::int32_t x1 = std::min(cell(box.max.x, cfg.origin.x), cfg.dims.h - 1);
        const std::int32_t y0 = std::max(cell(box.min.y, cfg.origin.y), 0);
        const std::int32_t y1 = std::min(cell(box.max.y, cfg.origin.y), cfg.dims.w - 1);
        const std::int32_t z0 = std::max(cell(box.min.z, cfg.origin.z), 0);
        const std::int32_t z1 = std::min(cell(box.max.z, cfg.origin.z), cfg.dims.z - 1);
        for (std::int32_t x = x0; x <= x1; ++x) {
            for (std::int32_t y = y0; y <= y1; ++y) {
                for (std::int32_t z = z0; z <= z1; ++z) grid.at(x, y, z) = box.cls;
            }
        }
    }
    return grid;
}

LabelGrid surface_ground_truth(const SyntheticScene& scene, std::span<const FrameBundle> frames) {
    // Direct per-pixel unprojection and majority count, independent of the
    // clue pipeline's accumulate/filter/voxelize path.
    const GridConfig& cfg = scene.grid;
    std::map<std::size_t, std::map<std::uint16_t, std::uint32_t>> votes;

    for (const FrameBundle& frame : frames) {
        const CameraIntrinsics& k = frame.cam.intrinsics;
        const Pose inv_ext = invert_pose(frame.cam.extrinsics);
        for (std::uint32_t v = 0; v < frame.depth.height; ++v) {
            for (std::uint32_t u = 0; u < frame.depth.width; ++u) {
                const float d = frame.depth.at(u, v);
                if (!(d > 0.0f)) continue;
                const std::uint8_t cls = frame.semantics.at(u, v);
                if (cls == kIgnoreLabel) continue;
                const double depth = static_cast<double>(d);
                const Vec3 p_cam{(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
                const Vec3 p = frame.frame_pose.apply(inv_ext.apply(p_cam));
                const double fx = std::floor((p.x - cfg.origin.x) / cfg.voxel_size);
                const double fy = std::floor((p.y - cfg.origin.y) / cfg.voxel_size);
                const double fz = std::floor((p.z - cfg.origin.z) / cfg.voxel_size);
                if (fx < 0 || fy < 0 || fz < 0 || fx >= cfg.dims.h || fy >= cfg.dims.w ||
                    fz >= cfg.dims.z) {
                    continue;
                }
                const std::size_t linear =
                    (static_cast<std::size_t>(fx) * cfg.dims.w + static_cast<std::size_t>(fy)) *
                        cfg.dims.z +
                    static_cast<std::size_t>(fz);
                ++votes[linear][cls];
            }
        }
    }

    LabelGrid grid = LabelGrid::empty(cfg);
    grid.ignore_mask.assign(cfg.voxel_count(), 1);
    for (const auto& [linear, classes] : votes) {
        std::uint16_t best = 0;
        std::uint32_t best_count = 0;
        for (const auto& [cls, count] : classes) {
            if (count > best_count) {
                best = cls;
                best_count = count;
            }
        }
        grid.labels[linear] = best;
        grid.ignore_mask[linear] = 0;
    }
    return grid;
}

void add_depth_noise(DepthMap& depth, const DepthNoise& noise) {
    SeededRng rng(noise.seed);
    for (float& value : depth.values) {
        if (!(value > 0.0f)) continue;
        double d = static_cast<double>(value);
        if (noise.jitter_sigma > 0.0) d *= 1.0 + noise.jitter_sigma * rng.normal();
        if (noise.outlier_fraction > 0.0 && rng.unit() < noise.outlier_fraction) {
            d *= rng.uniform(noise.outlier_scale_lo, noise.outlier_scale_hi);
        }
        value = static_cast<float>(std::max(d, 1e-3));
    }
}

}  // namespace ssc
