#include "ssc/spatial_index.hpp"

#include <algorithm>
#include <numeric>

namespace ssc {
namespace {

double axis_of(const Vec3& p, int axis) {
    switch (axis) {
        case 0: return p.x;
        case 1: return p.y;
        default: return p.z;
    }
}

struct HeapEntry {
    double dist_sq;
    std::size_t index;

    // Lexicographic (dist, index); the heap keeps the worst entry on top.
    bool operator<(const HeapEntry& o) const {
        return dist_sq < o.dist_sq || (dist_sq == o.dist_sq && index < o.index);
    }
};

}  // namespace

double SpatialIndex::coord(std::uint32_t idx, int axis) const {
    return axis_of(points_[idx], axis);
}

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(points_.size() / kLeafSize * 2 + 4);
        root_ = build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    // Split the widest axis at the median.
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        const Vec3& p = points_[order_[i]];
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 extent = hi - lo;
    int axis = 0;
    if (extent.y > axis_of(extent, axis)) axis = 1;
    if (extent.z > axis_of(extent, axis)) axis = 2;

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return coord(a, axis) < coord(b, axis); });

    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = coord(order_[mid], axis);
    nodes_[id].child_left = left;
    nodes_[id].child_right = right;
    return id;
}

std::vector<std::size_t> SpatialIndex::radius_query(const Vec3& center, double radius,
                                                    std::optional<std::size_t> exclude) const {
    std::vector<std::size_t> result;
    if (root_ < 0) return result;
    const double r_sq = radius * radius;

    std::vector<std::int32_t> stack{root_};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (node.child_left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (exclude && idx == *exclude) continue;
                if ((points_[idx] - center).squared_norm() <= r_sq) result.push_back(idx);
            }
            continue;
        }
        const double delta = axis_of(center, node.axis) - node.split;
        // The boundary is inclusive, so only a strictly larger plane
        // distance can rule a side out.
        if (delta <= 0.0) {
            stack.push_back(node.child_left);
            if (delta * delta <= r_sq) stack.push_back(node.child_right);
        } else {
            stack.push_back(node.child_right);
            if (delta * delta <= r_sq) stack.push_back(node.child_left);
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

std::vector<std::size_t> SpatialIndex::knn_query(const Vec3& center, std::size_t k,
                                                 std::optional<std::size_t> exclude) const {
    std::vector<std::size_t> result;
    if (root_ < 0 || k == 0) return result;

    std::vector<HeapEntry> heap;  // max-heap: worst candidate at front
    heap.reserve(k + 1);

    auto offer = [&](std::size_t idx) {
        if (exclude && idx == *exclude) return;
        const HeapEntry entry{(points_[idx] - center).squared_norm(), idx};
        if (heap.size() < k) {
            heap.push_back(entry);
            std::push_heap(heap.begin(), heap.end());
        } else if (entry < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = entry;
            std::push_heap(heap.begin(), heap.end());
        }
    };

    // Recursive descent, near side first; the far side is pruned only when
    // the heap is full and the plane distance strictly exceeds the current
    // worst distance (ties may still displace a larger index).
    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.child_left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) offer(order_[i]);
            return;
        }
        const double delta = axis_of(center, node.axis) - node.split;
        const std::int32_t near = delta <= 0.0 ? node.child_left : node.child_right;
        const std::int32_t far = delta <= 0.0 ? node.child_right : node.child_left;
        self(self, near);
        if (heap.size() < k || delta * delta <= heap.front().dist_sq) self(self, far);
    };
    visit(visit, root_);

    std::sort(heap.begin(), heap.end());
    result.reserve(heap.size());
    for (const HeapEntry& e : heap) result.push_back(e.index);
    return result;
}

}  // namespace ssc
