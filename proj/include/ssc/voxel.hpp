#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ssc/geometry.hpp"
#include "ssc/point_cloud.hpp"

namespace ssc {

struct Dims3 {
    std::int32_t h = 0, w = 0, z = 0;

    std::size_t total() const {
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
               static_cast<std::size_t>(z);
    }
    bool operator==(const Dims3&) const = default;
};

// Grid geometry and label space. `origin` is the world coordinate of the
// min corner of voxel (0,0,0). Linear index = x*(w*z) + y*z + zi with the
// x axis spanning [0, h) — the SemanticKITTI volume layout.
struct GridConfig {
    Dims3 dims;
    double voxel_size = 0.2;
    Vec3 origin;
    int num_classes = 1;

    void validate() const;
    std::size_t voxel_count() const { return dims.total(); }

    std::size_t linear(std::int32_t x, std::int32_t y, std::int32_t zi) const {
        return (static_cast<std::size_t>(x) * dims.w + y) * dims.z + zi;
    }
};

struct VoxelIndex {
    std::int32_t x = 0, y = 0, z = 0;
    bool operator==(const VoxelIndex&) const = default;
};

// Dense voxel labels, 0 = empty. An optional ignore mask (1 = excluded from
// scoring) rides along for evaluation.
struct LabelGrid {
    GridConfig config;
    std::vector<std::uint16_t> labels;
    std::vector<std::uint8_t> ignore_mask;  // empty, or voxel_count() entries

    static LabelGrid empty(const GridConfig& config);

    std::uint16_t at(std::int32_t x, std::int32_t y, std::int32_t z) const {
        return labels[config.linear(x, y, z)];
    }
    std::uint16_t& at(std::int32_t x, std::int32_t y, std::int32_t z) {
        return labels[config.linear(x, y, z)];
    }
};

struct BoolGrid {
    Dims3 dims;
    std::vector<std::uint8_t> values;  // 0/1 per voxel, same linear order

    static BoolGrid zeros(const Dims3& dims) { return {dims, std::vector<std::uint8_t>(dims.total(), 0)}; }
};

// Floor-discretizes a world point; out-of-range points map to nullopt.
std::optional<VoxelIndex> world_to_voxel(const Vec3& p, const GridConfig& config);

Vec3 voxel_center(const VoxelIndex& idx, const GridConfig& config);

// Majority class per voxel over the in-bounds points, ties to the smaller
// class id. Input class ids must lie in [1, C]. Deterministic regardless of
// point order.
LabelGrid voxelize(const SemanticPointCloud& cloud, const GridConfig& config);

BoolGrid occupancy_of(const LabelGrid& grid);

// Label-aware morphological dilation: empty voxels adopt the majority class
// among occupied voxels within Chebyshev distance `radius` (ties to the
// smaller id); occupied voxels are unchanged.
LabelGrid dilate_labels(const LabelGrid& grid, int radius);

}  // namespace ssc
