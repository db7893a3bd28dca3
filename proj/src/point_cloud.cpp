#include "ssc/point_cloud.hpp"

namespace ssc {

void SemanticPointCloud::validate() const {
    if (coords.size() != classes.size()) {
        throw invalid_input("point cloud has " + std::to_string(coords.size()) +
                            " coordinates but " + std::to_string(classes.size()) + " classes");
    }
    for (const Vec3& p : coords) {
        if (!p.finite()) throw invalid_input("point cloud contains non-finite coordinates");
    }
}

SemanticPointCloud transform_points(const SemanticPointCloud& cloud, const Pose& pose) {
    SemanticPointCloud out;
    out.coords.reserve(cloud.size());
    out.classes = cloud.classes;
    for (const Vec3& p : cloud.coords) out.coords.push_back(pose.apply(p));
    return out;
}

}  // namespace ssc
