#include "ssc/geometry.hpp"

#include <cmath>
#include <string>

namespace ssc {

double Vec3::norm() const { return std::sqrt(squared_norm()); }

bool Vec3::finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Vec3 Mat3::operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
            r(i, j) = s;
        }
    }
    return r;
}

Mat3 Mat3::transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
}

double Mat3::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 Mat3::inverse() const {
    const double det = determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) {
        throw invalid_input("matrix is singular, cannot invert");
    }
    const double inv = 1.0 / det;
    Mat3 r;
    r(0, 0) = (m[4] * m[8] - m[5] * m[7]) * inv;
    r(0, 1) = (m[2] * m[7] - m[1] * m[8]) * inv;
    r(0, 2) = (m[1] * m[5] - m[2] * m[4]) * inv;
    r(1, 0) = (m[5] * m[6] - m[3] * m[8]) * inv;
    r(1, 1) = (m[0] * m[8] - m[2] * m[6]) * inv;
    r(1, 2) = (m[2] * m[3] - m[0] * m[5]) * inv;
    r(2, 0) = (m[3] * m[7] - m[4] * m[6]) * inv;
    r(2, 1) = (m[1] * m[6] - m[0] * m[7]) * inv;
    r(2, 2) = (m[0] * m[4] - m[1] * m[3]) * inv;
    return r;
}

double orthonormality_defect(const Mat3& r) {
    const Mat3 g = r.transposed() * r;
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(g(i, j) - target));
        }
    }
    return worst;
}

Mat3 nearest_rotation(const Mat3& m) {
    if (!(m.determinant() > 0.0)) {
        throw invalid_input("nearest_rotation requires a positive-determinant matrix");
    }
    // Newton iteration for the polar factor: X <- (X + X^-T) / 2.
    // Quadratic convergence near orthogonality.
    Mat3 x = m;
    for (int iter = 0; iter < 32; ++iter) {
        const Mat3 xit = x.inverse().transposed();
        Mat3 next;
        double delta = 0.0;
        for (int i = 0; i < 9; ++i) {
            next.m[i] = 0.5 * (x.m[i] + xit.m[i]);
            delta = std::max(delta, std::abs(next.m[i] - x.m[i]));
        }
        x = next;
        if (delta < 1e-15) break;
    }
    return x;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
        !std::isfinite(cx) || !std::isfinite(cy)) {
        throw invalid_input("camera intrinsics require positive finite focal lengths "
                            "and finite principal point");
    }
}

void Pose::validate(double tol) const {
    if (!translation.finite()) throw invalid_input("pose translation is not finite");
    for (double v : rotation.m) {
        if (!std::isfinite(v)) throw invalid_input("pose rotation is not finite");
    }
    if (orthonormality_defect(rotation) > tol) {
        throw invalid_input("pose rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > tol) {
        throw invalid_input("pose rotation determinant is not +1");
    }
}

Pose invert_pose(const Pose& pose) {
    Pose inv;
    inv.rotation = pose.rotation.transposed();
    inv.translation = (inv.rotation * pose.translation) * -1.0;
    return inv;
}

Pose compose(const Pose& a, const Pose& b) {
    Pose r;
    r.rotation = a.rotation * b.rotation;
    r.translation = a.rotation * b.translation + a.translation;
    return r;
}

Vec3 unproject_pixel(double u, double v, double depth, const CameraModel& cam) {
    if (!std::isfinite(depth) || depth <= 0.0) {
        throw invalid_input("unproject_pixel requires a positive finite depth, got " +
                            std::to_string(depth));
    }
    const CameraIntrinsics& k = cam.intrinsics;
    const Vec3 p_cam{(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
    return invert_pose(cam.extrinsics).apply(p_cam);
}

PixelDepth project_point(const Vec3& point, const CameraModel& cam) {
    const Vec3 p_cam = cam.extrinsics.apply(point);
    if (!(p_cam.z > 0.0)) {
        throw behind_camera_error("point is at or behind the camera plane (z = " +
                                  std::to_string(p_cam.z) + ")");
    }
    const CameraIntrinsics& k = cam.intrinsics;
    return {k.fx * p_cam.x / p_cam.z + k.cx, k.fy * p_cam.y / p_cam.z + k.cy, p_cam.z};
}

}  // namespace ssc
