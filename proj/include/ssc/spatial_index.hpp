#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ssc/geometry.hpp"

namespace ssc {

// kd-tree over a fixed point set. Queries reproduce a brute-force scan
// exactly: the radius test is inclusive (dist <= r) and k-nearest ties go to
// the smaller point index. `exclude` names the center's own index when the
// center belongs to the indexed set; duplicates at the same coordinates are
// still counted.
class SpatialIndex {
public:
    SpatialIndex() = default;
    explicit SpatialIndex(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }

    // Ascending point indices with |p_i - center| <= radius, i != exclude.
    std::vector<std::size_t> radius_query(const Vec3& center, double radius,
                                          std::optional<std::size_t> exclude = std::nullopt) const;

    // Up to k nearest indices ordered by (distance, index).
    std::vector<std::size_t> knn_query(const Vec3& center, std::size_t k,
                                       std::optional<std::size_t> exclude = std::nullopt) const;

private:
    struct Node {
        // Leaf when child_left < 0: [begin, end) indexes into order_.
        std::int32_t child_left = -1;
        std::int32_t child_right = -1;
        std::uint32_t begin = 0, end = 0;
        int axis = 0;
        double split = 0.0;
    };

    static constexpr std::uint32_t kLeafSize = 16;

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    double coord(std::uint32_t idx, int axis) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

}  // namespace ssc
