#include "ssc/voxel.hpp"

#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

#include "ssc/parallel.hpp"

namespace ssc {

void GridConfig::validate() const {
    if (dims.h <= 0 || dims.w <= 0 || dims.z <= 0) {
        throw invalid_input("grid dims must be positive");
    }
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
        throw invalid_input("voxel_size must be positive and finite");
    }
    if (!origin.finite()) throw invalid_input("grid origin must be finite");
    if (num_classes < 1) throw invalid_input("num_classes must be >= 1");
}

LabelGrid LabelGrid::empty(const GridConfig& config) {
    config.validate();
    LabelGrid g;
    g.config = config;
    g.labels.assign(config.voxel_count(), 0);
    return g;
}

std::optional<VoxelIndex> world_to_voxel(const Vec3& p, const GridConfig& config) {
    const double inv = 1.0 / config.voxel_size;
    const double fx = std::floor((p.x - config.origin.x) * inv);
    const double fy = std::floor((p.y - config.origin.y) * inv);
    const double fz = std::floor((p.z - config.origin.z) * inv);
    if (fx < 0 || fy < 0 || fz < 0 || fx >= config.dims.h || fy >= config.dims.w ||
        fz >= config.dims.z) {
        return std::nullopt;
    }
    return VoxelIndex{static_cast<std::int32_t>(fx), static_cast<std::int32_t>(fy),
                      static_cast<std::int32_t>(fz)};
}

Vec3 voxel_center(const VoxelIndex& idx, const GridConfig& config) {
    const double s = config.voxel_size;
    return {config.origin.x + (idx.x + 0.5) * s, config.origin.y + (idx.y + 0.5) * s,
            config.origin.z + (idx.z + 0.5) * s};
}

LabelGrid voxelize(const SemanticPointCloud& cloud, const GridConfig& config) {
    config.validate();
    cloud.validate();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const std::uint16_t cls = cloud.classes[i];
        if (cls == 0 || cls > config.num_classes) {
            throw invalid_input("voxelize: class id " + std::to_string(cls) +
                                " outside [1, " + std::to_string(config.num_classes) + "]");
        }
    }

    // Per-chunk vote maps, merged in chunk order. Counts are integers so the
    // merged histogram is independent of chunking and point order.
    using VoteMap = std::unordered_map<std::size_t, std::map<std::uint16_t, std::uint32_t>>;
    constexpr std::size_t kChunk = 16384;
    std::vector<VoteMap> partials(chunk_count(cloud.size(), kChunk));
    parallel_chunks(cloud.size(), kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        VoteMap& votes = partials[c];
        for (std::size_t i = begin; i < end; ++i) {
            if (const auto idx = world_to_voxel(cloud.coords[i], config)) {
                ++votes[config.linear(idx->x, idx->y, idx->z)][cloud.classes[i]];
            }
        }
    });

    VoteMap merged;
    for (const VoteMap& part : partials) {
        for (const auto& [vox, classes] : part) {
            auto& into = merged[vox];
            for (const auto& [cls, n] : classes) into[cls] += n;
        }
    }

    LabelGrid grid = LabelGrid::empty(config);
    for (const auto& [vox, classes] : merged) {
        std::uint16_t best = 0;
        std::uint32_t best_count = 0;
        for (const auto& [cls, n] : classes) {  // ascending id: first max wins ties
            if (n > best_count) {
                best = cls;
                best_count = n;
            }
        }
        grid.labels[vox] = best;
    }
    return grid;
}

BoolGrid occupancy_of(const LabelGrid& grid) {
    BoolGrid occ = BoolGrid::zeros(grid.config.dims);
    for (std::size_t i = 0; i < grid.labels.size(); ++i) {
        occ.values[i] = grid.labels[i] != 0 ? 1 : 0;
    }
    return occ;
}

LabelGrid dilate_labels(const LabelGrid& grid, int radius) {
    if (radius < 0) throw invalid_input("dilate_labels: radius must be >= 0");
    LabelGrid out = grid;
    const Dims3 d = grid.config.dims;
    for (std::int32_t x = 0; x < d.h; ++x) {
        for (std::int32_t y = 0; y < d.w; ++y) {
            for (std::int32_t z = 0; z < d.z; ++z) {
                if (grid.at(x, y, z) != 0) continue;
                std::map<std::uint16_t, int> votes;
                for (std::int32_t dx = -radius; dx <= radius; ++dx) {
                    for (std::int32_t dy = -radius; dy <= radius; ++dy) {
                        for (std::int32_t dz = -radius; dz <= radius; ++dz) {
                            const std::int32_t nx = x + dx, ny = y + dy, nz = z + dz;
                            if (nx < 0 || ny < 0 || nz < 0 || nx >= d.h || ny >= d.w ||
                                nz >= d.z) {
                                continue;
                            }
                            const std::uint16_t cls = grid.at(nx, ny, nz);
                            if (cls != 0) ++votes[cls];
                        }
                    }
                }
                if (votes.empty()) continue;
                std::uint16_t best = 0;
                int best_count = 0;
                for (const auto& [cls, n] : votes) {
                    if (n > best_count) {
                        best = cls;
                        best_count = n;
                    }
                }
                out.at(x, y, z) = best;
            }
        }
    }
    return out;
}

}  // namespace ssc
