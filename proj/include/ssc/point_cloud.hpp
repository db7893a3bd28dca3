#pragma once

#include <cstdint>
#include <vector>

#include "ssc/geometry.hpp"

namespace ssc {

// Points with one semantic class id each. Class 0 is reserved for "empty"
// in label grids, so cloud points normally carry ids in [1, C].
struct SemanticPointCloud {
    std::vector<Vec3> coords;
    std::vector<std::uint16_t> classes;

    std::size_t size() const { return coords.size(); }
    bool empty() const { return coords.empty(); }

    void push_back(const Vec3& p, std::uint16_t cls) {
        coords.push_back(p);
        classes.push_back(cls);
    }

    void append(const SemanticPointCloud& other) {
        coords.insert(coords.end(), other.coords.begin(), other.coords.end());
        classes.insert(classes.end(), other.classes.begin(), other.classes.end());
    }

    void validate() const;  // equal lengths, finite coordinates
};

// Applies a rigid transform to every coordinate; classes and order unchanged.
SemanticPointCloud transform_points(const SemanticPointCloud& cloud, const Pose& pose);

}  // namespace ssc
