#include <doctest.h>

#include "ssc/geometry.hpp"
#include "ssc/point_cloud.hpp"
#include "test_util.hpp"

using namespace ssc;

namespace {

CameraModel identity_camera() { return {}; }

}  // namespace

TEST_CASE("unproject_pixel identity camera") {
    const Vec3 p = unproject_pixel(0, 0, 1.0, identity_camera());
    CHECK(p.x == doctest::Approx(0.0));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(1.0));

    const Vec3 q = unproject_pixel(2, 3, 2.0, identity_camera());
    CHECK(q.x == doctest::Approx(4.0));
    CHECK(q.y == doctest::Approx(6.0));
    CHECK(q.z == doctest::Approx(2.0));
}

TEST_CASE("unproject_pixel matches the homogeneous-matrix oracle") {
    CameraModel cam;
    cam.intrinsics = {2.0, 2.0, 1.0, 1.0};
    cam.extrinsics.translation = {1.0, 0.0, 0.0};

    const Vec3 p = unproject_pixel(3, 3, 4.0, cam);
    const Vec3 expected = testutil::oracle_unproject(3, 3, 4.0, cam);
    CHECK(p.x == doctest::Approx(expected.x).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(expected.y).epsilon(1e-12));
    CHECK(p.z == doctest::Approx(expected.z).epsilon(1e-12));

    // The intermediate camera-frame point is ((3-1)*4/2, (3-1)*4/2, 4).
    const Vec3 cam_point = cam.extrinsics.apply(p);
    CHECK(cam_point.x == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(cam_point.y == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(cam_point.z == doctest::Approx(4.0).epsilon(1e-12));

    SeededRng rng(71);
    for (int i = 0; i < 50; ++i) {
        CameraModel rand_cam;
        rand_cam.intrinsics = {rng.uniform(100, 900), rng.uniform(100, 900),
                               rng.uniform(-50, 700), rng.uniform(-50, 400)};
        rand_cam.extrinsics = testutil::random_pose(rng);
        const double u = rng.uniform(0, 2048), v = rng.uniform(0, 1024);
        const double d = rng.uniform(0.5, 80);
        const Vec3 got = unproject_pixel(u, v, d, rand_cam);
        const Vec3 want = testutil::oracle_unproject(u, v, d, rand_cam);
        CHECK(std::abs(got.x - want.x) < 1e-8);
        CHECK(std::abs(got.y - want.y) < 1e-8);
        CHECK(std::abs(got.z - want.z) < 1e-8);
    }
}

TEST_CASE("unproject_pixel rejects bad depth") {
    CHECK_THROWS_AS(unproject_pixel(0, 0, 0.0, identity_camera()), invalid_input);
    CHECK_THROWS_AS(unproject_pixel(0, 0, -1.0, identity_camera()), invalid_input);
    CHECK_THROWS_AS(unproject_pixel(0, 0, std::nan(""), identity_camera()), invalid_input);
}

TEST_CASE("project_point basics") {
    const auto [u, v, d] = project_point({0, 0, 1}, identity_camera());
    CHECK(u == doctest::Approx(0.0));
    CHECK(v == doctest::Approx(0.0));
    CHECK(d == doctest::Approx(1.0));

    CameraModel cam;
    cam.intrinsics = {2.0, 2.0, 1.0, 1.0};
    const auto p = project_point({4, 4, 4}, cam);
    CHECK(p.u == doctest::Approx(3.0));
    CHECK(p.v == doctest::Approx(3.0));
    CHECK(p.depth == doctest::Approx(4.0));

    CHECK_THROWS_AS(project_point({0, 0, -1}, identity_camera()), behind_camera_error);
    CHECK_THROWS_AS(project_point({0, 0, 0}, identity_camera()), behind_camera_error);
}

TEST_CASE("project/unproject round trip over the working envelope") {
    SeededRng rng(1234);
    for (int i = 0; i < 2000; ++i) {
        CameraModel cam;
        cam.intrinsics = {rng.uniform(100, 1500), rng.uniform(100, 1500), rng.uniform(0, 2048),
                          rng.uniform(0, 1024)};
        cam.extrinsics = testutil::random_pose(rng);
        const double u = rng.uniform(0, 2048), v = rng.uniform(0, 1024);
        const double d = rng.uniform(0.5, 80);

        const Vec3 world = unproject_pixel(u, v, d, cam);
        const PixelDepth back = project_point(world, cam);
        CHECK(std::abs(back.u - u) < 1e-6);
        CHECK(std::abs(back.v - v) < 1e-6);
        CHECK(std::abs(back.depth - d) / d < 1e-9);
    }
}

TEST_CASE("transform_points basics") {
    SemanticPointCloud cloud;
    cloud.push_back({1, 0, 0}, 1);
    cloud.push_back({0, 0, 0}, 2);

    SUBCASE("identity") {
        const auto out = transform_points(cloud, Pose{});
        CHECK(out.coords[0].x == 1.0);
        CHECK(out.classes == cloud.classes);
    }
    SUBCASE("pure translation") {
        Pose pose;
        pose.translation = {1, 2, 3};
        const auto out = transform_points(cloud, pose);
        CHECK(out.coords[1].x == doctest::Approx(1.0));
        CHECK(out.coords[1].y == doctest::Approx(2.0));
        CHECK(out.coords[1].z == doctest::Approx(3.0));
    }
    SUBCASE("quarter turn about z") {
        Pose pose;
        pose.rotation = testutil::rotation_about({0, 0, 1}, 3.14159265358979323846 / 2);
        const auto out = transform_points(cloud, pose);
        CHECK(std::abs(out.coords[0].x - 0.0) < 1e-12);
        CHECK(std::abs(out.coords[0].y - 1.0) < 1e-12);
        CHECK(std::abs(out.coords[0].z - 0.0) < 1e-12);
    }
}

TEST_CASE("transform_points preserves pairwise distances") {
    SeededRng rng(99);
    const SemanticPointCloud cloud = testutil::random_cloud(rng, 64, 3);
    const Pose pose = testutil::random_pose(rng);
    const SemanticPointCloud moved = transform_points(cloud, pose);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t j = i + 1; j < cloud.size(); j += 7) {
            const double before = (cloud.coords[i] - cloud.coords[j]).norm();
            const double after = (moved.coords[i] - moved.coords[j]).norm();
            CHECK(std::abs(after - before) <= 1e-9 * std::max(1.0, before));
        }
    }
}

TEST_CASE("invert_pose") {
    SUBCASE("identity and pure translation") {
        const Pose id = invert_pose(Pose{});
        CHECK(orthonormality_defect(id.rotation) < 1e-15);
        CHECK(id.translation.norm() < 1e-15);

        Pose t;
        t.translation = {1, 2, 3};
        const Pose inv = invert_pose(t);
        CHECK(inv.translation.x == doctest::Approx(-1.0));
        CHECK(inv.translation.y == doctest::Approx(-2.0));
        CHECK(inv.translation.z == doctest::Approx(-3.0));
    }
    SUBCASE("composition with the inverse is the identity") {
        SeededRng rng(7);
        for (int i = 0; i < 100; ++i) {
            const Pose pose = testutil::random_pose(rng);
            const Pose both = compose(pose, invert_pose(pose));
            CHECK(orthonormality_defect(both.rotation) < 1e-9);
            for (int k = 0; k < 3; ++k) {
                CHECK(std::abs(both.rotation(k, k) - 1.0) < 1e-9);
            }
            CHECK(both.translation.norm() < 1e-9);
        }
    }
    SUBCASE("involution") {
        SeededRng rng(8);
        for (int i = 0; i < 100; ++i) {
            const Pose pose = testutil::random_pose(rng);
            const Pose twice = invert_pose(invert_pose(pose));
            for (int k = 0; k < 9; ++k) {
                CHECK(std::abs(twice.rotation.m[k] - pose.rotation.m[k]) < 1e-12);
            }
            CHECK((twice.translation - pose.translation).norm() < 1e-12);
        }
    }
}

TEST_CASE("nearest_rotation restores slightly perturbed rotations") {
    SeededRng rng(5);
    for (int i = 0; i < 50; ++i) {
        const Pose pose = testutil::random_pose(rng);
        Mat3 wobbled = pose.rotation;
        for (double& v : wobbled.m) v += rng.uniform(-1e-7, 1e-7);
        const Mat3 snapped = nearest_rotation(wobbled);
        CHECK(orthonormality_defect(snapped) < 1e-12);
        for (int k = 0; k < 9; ++k) {
            CHECK(std::abs(snapped.m[k] - pose.rotation.m[k]) < 1e-6);
        }
    }
    CHECK_THROWS_AS(nearest_rotation(Mat3{{0, 0, 0, 0, 0, 0, 0, 0, 0}}), invalid_input);
}

TEST_CASE("pose validation catches broken rotations") {
    Pose pose;
    pose.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(pose.validate(), invalid_input);

    CameraIntrinsics k{0.0, 1.0, 0.0, 0.0};
    CHECK_THROWS_AS(k.validate(), invalid_input);
}
