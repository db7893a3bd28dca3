#pragma once

#include <map>
#include <span>

#include "ssc/formats.hpp"
#include "ssc/geometry.hpp"
#include "ssc/point_cloud.hpp"
#include "ssc/spatial_index.hpp"
#include "ssc/voxel.hpp"

namespace ssc {

// One timestamp's inputs: depth and semantic rasters, the camera that took
// them, and the frame pose placing the camera model's reference frame in the
// world (camera-to-world when the extrinsics are identity).
struct FrameBundle {
    DepthMap depth;
    SemanticMap semantics;
    CameraModel cam;
    Pose frame_pose;
};

struct FilterConfig {
    double radius = 0.4;     // meters
    int min_neighbors = 5;   // within radius, self excluded
    int sor_k = 16;          // neighbors for the statistical filter
    double sor_alpha = 2.0;  // std-dev multiplier

    void validate() const;
};

// Unprojects every stride-th pixel with depth > 0 and a non-ignore label
// into world coordinates. Pixels are indexed by their integer coordinates.
SemanticPointCloud unproject_frame(const FrameBundle& frame, int stride);

// Concatenates per-frame clouds expressed in the target ego frame (world
// points transformed by the inverse target pose). Frame order is preserved;
// duplicates are retained.
SemanticPointCloud accumulate_frames(std::span<const FrameBundle> frames, const Pose& target_pose,
                                     int stride);

// Disjoint partition by class id; per-class point order follows the input.
std::map<std::uint16_t, SemanticPointCloud> split_by_class(const SemanticPointCloud& cloud);

// Keeps points with at least min_neighbors others within `radius`
// (inclusive, self excluded). Decisions are made against the input cloud;
// survivor order is stable.
SemanticPointCloud radius_filter(const SemanticPointCloud& cloud, double radius,
                                 int min_neighbors);

// One-shot statistical outlier removal: with m_i the mean distance from
// point i to its sor_k nearest neighbors (accumulated in ascending
// (distance, index) order) and mu/sigma the population mean and standard
// deviation of {m_i}, keeps exactly the points with m_i <= mu +
// sor_alpha*sigma. Clouds with fewer than two points pass through.
SemanticPointCloud statistical_filter(const SemanticPointCloud& cloud, int sor_k,
                                      double sor_alpha);

// Accumulate -> split by class -> per-class radius filter -> per-class
// statistical filter -> merge in class-id order. The regularized cloud in
// the target ego frame, one step short of voxelization.
SemanticPointCloud generate_clue_cloud(std::span<const FrameBundle> frames,
                                       const Pose& target_pose, const FilterConfig& filter,
                                       int stride);

// Full pipeline: generate_clue_cloud followed by voxelize.
LabelGrid generate_clues(std::span<const FrameBundle> frames, const Pose& target_pose,
                         const GridConfig& grid, const FilterConfig& filter, int stride);

}  // namespace ssc
