#include "test_support.hpp"

#include "stg/geometry.hpp"

#include <doctest.h>

using namespace stg;
using namespace stg::test;

TEST_CASE("normals of a plane") {
    PointCloud c;
    for (const auto& p : random_points(500, 1)) c.coords.push_back(Vec3(p.x(), p.y(), 0.0));
    const NormalEstimate est = estimate_normals(c, 15);
    CHECK(est.degenerate_count == 0);
    for (const auto& n : est.cloud.normals) CHECK(std::abs(std::abs(n.z()) - 1.0) <= 1e-6);
}

TEST_CASE("normals of a sphere are radial") {
    const PointCloud s = unit_sphere(2000, 4);
    const NormalEstimate est = estimate_normals(s, 10);
    std::size_t good = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::abs(est.cloud.normals[i].dot(s.coords[i].normalized())) >= 0.99) ++good;
    }
    CHECK(good >= 1900);
}

TEST_CASE("normals are unit length and thread independent") {
    set_num_threads(4);
    const PointCloud c = cloud_of(random_points(1200, 7));
    const NormalEstimate a = estimate_normals(c, 12, Exec::serial);
    const NormalEstimate b = estimate_normals(c, 12, Exec::parallel);
    CHECK(a.cloud.normals == b.cloud.normals);
    for (const auto& n : a.cloud.normals) CHECK(std::abs(n.norm() - 1.0) <= 1e-12);
    CHECK(a.cloud.coords == c.coords);
}

TEST_CASE("coincident neighborhood falls back to +z") {
    PointCloud c;
    for (int i = 0; i < 6; ++i) c.coords.push_back(Vec3(1, 1, 1));
    for (const auto& p : random_points(20, 3, 10.0, 20.0)) c.coords.push_back(p);
    const NormalEstimate est = estimate_normals(c, 4);
    for (int i = 0; i < 6; ++i) {
        CHECK(est.degenerate[i] == 1);
        CHECK(est.cloud.normals[i] == Vec3::UnitZ());
    }
    CHECK(est.degenerate_count == 6);
}

TEST_CASE("normal estimation preconditions") {
    const PointCloud c = cloud_of(random_points(10, 1));
    CHECK_THROWS_AS(estimate_normals(c, 10), std::invalid_argument);
    CHECK_THROWS_AS(estimate_normals(c, 2), std::invalid_argument);
    CHECK_NOTHROW(estimate_normals(c, 9));
}

TEST_CASE("tangent plane projection") {
    const TangentFrame z{Vec3::Zero(), Vec3::UnitZ()};
    const auto at_origin = project_distance(z, Vec3::Zero());
    CHECK(at_origin.signed_distance == 0.0);
    CHECK(at_origin.projection == Vec3::Zero());

    const auto p = project_distance(z, Vec3(3, 4, 5));
    CHECK(p.signed_distance == 5.0);
    CHECK(p.projection == Vec3(3, 4, 0));

    const auto q = project_distance({Vec3::Zero(), -Vec3::UnitZ()}, Vec3(3, 4, 5));
    CHECK(q.signed_distance == -5.0);
    CHECK(q.projection == Vec3(3, 4, 0));

    const auto pts = random_points(100, 9);
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const TangentFrame f{pts[i], pts[i + 1].normalized()};
        const Vec3 x = pts[(i + 7) % pts.size()] * 3.0;
        const auto r = project_distance(f, x);
        CHECK(std::abs((r.projection - f.origin).dot(f.normal)) <= 1e-12);
        CHECK((r.projection + r.signed_distance * f.normal - x).norm() <= 1e-12);
    }
}
