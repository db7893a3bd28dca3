#include "ssc/clues.hpp"

#include <cmath>
#include <string>

#include "ssc/parallel.hpp"

namespace ssc {

void FilterConfig::validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw invalid_input("filter radius must be positive and finite");
    }
    if (min_neighbors < 1) throw invalid_input("min_neighbors must be >= 1");
    if (sor_k < 1) throw invalid_input("sor_k must be >= 1");
    if (!(sor_alpha > 0.0) || !std::isfinite(sor_alpha)) {
        throw invalid_input("sor_alpha must be positive and finite");
    }
}

SemanticPointCloud unproject_frame(const FrameBundle& frame, int stride) {
    if (stride < 1) throw invalid_input("stride must be >= 1");
    if (frame.depth.width != frame.semantics.width ||
        frame.depth.height != frame.semantics.height) {
        throw invalid_input("depth and semantic rasters have different dimensions");
    }
    frame.cam.intrinsics.validate();

    // Same arithmetic as unproject_pixel with the extrinsic inverse hoisted
    // out of the loop, followed by the frame pose into world coordinates.
    const Pose inv_extrinsics = invert_pose(frame.cam.extrinsics);
    const CameraIntrinsics& k = frame.cam.intrinsics;

    SemanticPointCloud cloud;
    for (std::uint32_t v = 0; v < frame.depth.height; v += stride) {
        for (std::uint32_t u = 0; u < frame.depth.width; u += stride) {
            const float d = frame.depth.at(u, v);
            if (!(d > 0.0f) || !std::isfinite(d)) continue;
            const std::uint8_t cls = frame.semantics.at(u, v);
            if (cls == kIgnoreLabel) continue;
            const double depth = static_cast<double>(d);
            const Vec3 p_cam{(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
            cloud.push_back(frame.frame_pose.apply(inv_extrinsics.apply(p_cam)), cls);
        }
    }
    return cloud;
}

SemanticPointCloud accumulate_frames(std::span<const FrameBundle> frames, const Pose& target_pose,
                                     int stride) {
    if (frames.empty()) throw invalid_input("accumulate_frames requires at least one frame");
    if (stride < 1) throw invalid_input("stride must be >= 1");
    // Validate up front; worker threads must not throw.
    for (const FrameBundle& f : frames) {
        if (f.depth.width != f.semantics.width || f.depth.height != f.semantics.height) {
            throw invalid_input("depth and semantic rasters have different dimensions");
        }
        f.cam.intrinsics.validate();
    }
    const Pose to_target = invert_pose(target_pose);

    std::vector<SemanticPointCloud> per_frame(frames.size());
    parallel_chunks(frames.size(), 1, [&](std::size_t, std::size_t begin, std::size_t) {
        per_frame[begin] = transform_points(unproject_frame(frames[begin], stride), to_target);
    });

    SemanticPointCloud out;
    for (const SemanticPointCloud& cloud : per_frame) out.append(cloud);
    return out;
}

std::map<std::uint16_t, SemanticPointCloud> split_by_class(const SemanticPointCloud& cloud) {
    cloud.validate();
    std::map<std::uint16_t, SemanticPointCloud> parts;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        parts[cloud.classes[i]].push_back(cloud.coords[i], cloud.classes[i]);
    }
    return parts;
}

namespace {

SemanticPointCloud keep_points(const SemanticPointCloud& cloud, const std::vector<std::uint8_t>& keep) {
    SemanticPointCloud out;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (keep[i]) out.push_back(cloud.coords[i], cloud.classes[i]);
    }
    return out;
}

}  // namespace

SemanticPointCloud radius_filter(const SemanticPointCloud& cloud, double radius,
                                 int min_neighbors) {
    cloud.validate();
    if (!(radius > 0.0)) throw invalid_input("radius must be positive");
    if (min_neighbors < 1) throw invalid_input("min_neighbors must be >= 1");
    if (cloud.empty()) return cloud;

    const SpatialIndex index(cloud.coords);
    std::vector<std::uint8_t> keep(cloud.size(), 0);
    parallel_chunks(cloud.size(), 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto neighbors = index.radius_query(cloud.coords[i], radius, i);
            keep[i] = neighbors.size() >= static_cast<std::size_t>(min_neighbors);
        }
    });
    return keep_points(cloud, keep);
}

SemanticPointCloud statistical_filter(const SemanticPointCloud& cloud, int sor_k,
                                      double sor_alpha) {
    cloud.validate();
    if (sor_k < 1) throw invalid_input("sor_k must be >= 1");
    if (!(sor_alpha > 0.0)) throw invalid_input("sor_alpha must be positive");
    if (cloud.size() < 2) return cloud;

    const SpatialIndex index(cloud.coords);
    const std::size_t n = cloud.size();
    std::vector<double> mean_dist(n, 0.0);
    parallel_chunks(n, 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto nn = index.knn_query(cloud.coords[i], static_cast<std::size_t>(sor_k), i);
            double sum = 0.0;
            for (std::size_t j : nn) sum += (cloud.coords[j] - cloud.coords[i]).norm();
            mean_dist[i] = sum / static_cast<double>(nn.size());
        }
    });

    double mu = 0.0;
    for (double m : mean_dist) mu += m;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double m : mean_dist) var += (m - mu) * (m - mu);
    const double sigma = std::sqrt(var / static_cast<double>(n));
    const double cutoff = mu + sor_alpha * sigma;

    std::vector<std::uint8_t> keep(n, 0);
    for (std::size_t i = 0; i < n; ++i) keep[i] = mean_dist[i] <= cutoff;
    return keep_points(cloud, keep);
}

SemanticPointCloud generate_clue_cloud(std::span<const FrameBundle> frames,
                                       const Pose& target_pose, const FilterConfig& filter,
                                       int stride) {
    filter.validate();

    const SemanticPointCloud accumulated = accumulate_frames(frames, target_pose, stride);
    auto by_class = split_by_class(accumulated);

    // Per-class filtering is independent; results merge in class-id order
    // (std::map iteration), so the output matches serial execution exactly.
    std::vector<SemanticPointCloud*> slots;
    for (auto& [cls, part] : by_class) slots.push_back(&part);
    parallel_chunks(slots.size(), 1, [&](std::size_t, std::size_t begin, std::size_t) {
        SemanticPointCloud& part = *slots[begin];
        part = statistical_filter(radius_filter(part, filter.radius, filter.min_neighbors),
                                  filter.sor_k, filter.sor_alpha);
    });

    SemanticPointCloud merged;
    for (const auto& [cls, part] : by_class) merged.append(part);
    return merged;
}

LabelGrid generate_clues(std::span<const FrameBundle> frames, const Pose& target_pose,
                         const GridConfig& grid, const FilterConfig& filter, int stride) {
    grid.validate();
    return voxelize(generate_clue_cloud(frames, target_pose, filter, stride), grid);
}

}  // namespace ssc
