#pragma once

#include <array>

#include "ssc/error.hpp"

namespace ssc {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double squared_norm() const { return dot(*this); }
    double norm() const;
    bool finite() const;
};

Vec3 cross(const Vec3& a, const Vec3& b);

// Row-major 3x3 matrix; defaults to identity.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const;
    Mat3 operator*(const Mat3& o) const;
    Mat3 transposed() const;
    double determinant() const;
    Mat3 inverse() const;  // throws invalid_input when singular
};

// Largest absolute entry of R^T R - I.
double orthonormality_defect(const Mat3& r);

// Closest rotation in the Frobenius sense (polar factor, Higham iteration).
// Input must have positive determinant.
Mat3 nearest_rotation(const Mat3& m);

struct CameraIntrinsics {
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;

    void validate() const;  // fx, fy > 0, everything finite
};

// Rigid transform x' = R x + t. Rotation stays orthonormal with det +1.
struct Pose {
    Mat3 rotation;
    Vec3 translation;

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    void validate(double tol = 1e-9) const;
};

Pose invert_pose(const Pose& pose);

// compose(a, b): apply b first, then a.
Pose compose(const Pose& a, const Pose& b);

// Pinhole camera. Extrinsics map reference-frame (world/ego) coordinates to
// camera coordinates; the camera looks along +z.
struct CameraModel {
    CameraIntrinsics intrinsics;
    Pose extrinsics;
};

struct PixelDepth {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

// Pixel (u, v) at camera depth d to a point in the camera model's reference
// frame: the pixel is read as depth-scaled homogeneous coordinates, so the
// camera-frame point is ((u-cx)d/fx, (v-cy)d/fy, d), then the inverse
// extrinsic is applied. Throws invalid_input for non-positive or non-finite
// depth.
Vec3 unproject_pixel(double u, double v, double depth, const CameraModel& cam);

// Inverse of unproject_pixel. Throws behind_camera_error when the point has
// camera-frame z <= 0.
PixelDepth project_point(const Vec3& point, const CameraModel& cam);

}  // namespace ssc
