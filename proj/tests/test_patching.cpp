#include "test_support.hpp"

#include "stg/patching.hpp"

#include <doctest.h>

#include <set>

using namespace stg;
using namespace stg::test;

namespace {

// Oracle for the tangent-plane patch difference, straight from its definition.
double difference_oracle(const std::vector<Vec3>& a, const Vec3& na, const std::vector<Vec3>& b) {
    double sum = 0.0;
    for (const auto& p : a) {
        const Vec3 pp = p - p.dot(na) * na;
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Vec3 q = b[j] - b[j].dot(na) * na;
            const double d = (pp - q).squaredNorm();
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        const double dh = p.dot(na) - b[arg].dot(na);
        sum += dh * dh;
    }
    return std::sqrt(sum / a.size());
}

double similarity_oracle(const std::vector<Vec3>& a, const Vec3& na, const std::vector<Vec3>& b, const Vec3& nb) {
    const double ab = difference_oracle(a, na, b), ba = difference_oracle(b, nb, a);
    return std::sqrt((ab * ab + ba * ba) / 2.0);
}

std::vector<Vec3> rel_points(const PatchGeometry& g, std::size_t l) {
    const auto v = g.view(l);
    return {v.points.begin(), v.points.end()};
}

PatchGeometry geometry_for(const PointCloud& c, std::size_t m, std::size_t k, std::uint64_t seed) {
    const PatchSet ps = build_patches(c, m, k, seed);
    return make_patch_geometry(ps, estimate_normals(c, 8).cloud);
}

PatchView view_of(const std::vector<Vec3>& pts, const Vec3& normal) { return {pts, {Vec3::Zero(), normal}}; }

}  // namespace

TEST_CASE("one patch covering every point") {
    const PointCloud c = cloud_of(random_points(10, 1));
    const PatchSet ps = build_patches(c, 1, 9, 3);
    REQUIRE(ps.patch_count() == 1);
    const auto members = ps.patch(0);
    CHECK(std::set<std::size_t>(members.begin(), members.end()).size() == 10);
    CHECK_THROWS_AS(build_patches(c, 1, 10, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_patches(c, 11, 3, 3), std::invalid_argument);
}

TEST_CASE("patches are centers plus their nearest neighbors") {
    const PointCloud c = cloud_of(random_points(100, 2));
    const PatchSet ps = build_patches(c, 20, 9, 5);
    CHECK(ps.centers == farthest_point_sample(c.coords, 20, 5));
    REQUIRE(ps.rows() == 200);
    for (std::size_t l = 0; l < 20; ++l) {
        const auto members = ps.patch(l);
        CHECK(members[0] == ps.centers[l]);
        CHECK(ps.center_coords[l] == c.coords[ps.centers[l]]);
        const auto oracle = knn_oracle(c.coords, c.coords[ps.centers[l]], 9, static_cast<long>(ps.centers[l]));
        CHECK(std::vector<std::size_t>(members.begin() + 1, members.end()) == oracle);
        CHECK(std::set<std::size_t>(members.begin(), members.end()).size() == 10);
    }

    const auto stacked = stack_patches(ps, c.coords);
    for (std::size_t row = 0; row < ps.rows(); ++row) {
        const std::size_t l = ps.patch_of_row(row);
        CHECK(stacked[row] == c.coords[ps.members[row]] - ps.center_coords[l]);
        if (row % 10 == 0) CHECK(stacked[row] == Vec3::Zero());
    }

    set_num_threads(4);
    const PatchSet par = build_patches(c, 20, 9, 5, Exec::parallel);
    const PatchSet ser = build_patches(c, 20, 9, 5, Exec::serial);
    CHECK(par.members == ser.members);
}

TEST_CASE("patch similarity") {
    const auto a = random_points(10, 3, -0.1, 0.1);
    const Vec3 n = Vec3(0.2, -0.1, 1.0).normalized();

    CHECK(patch_similarity(view_of(a, n), view_of(a, n)) == 0.0);

    std::vector<Vec3> flat1, flat2;
    for (const auto& p : random_points(12, 4)) flat1.push_back(Vec3(p.x(), p.y(), 0));
    for (const auto& p : random_points(12, 5)) flat2.push_back(Vec3(p.x(), p.y(), 0));
    CHECK(patch_similarity(view_of(flat1, Vec3::UnitZ()), view_of(flat2, Vec3::UnitZ())) == 0.0);

    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto p = random_points(8, 100 + s, -0.2, 0.2);
        const auto q = random_points(8, 200 + s, -0.2, 0.2);
        const Vec3 np = random_points(1, 300 + s)[0].normalized();
        const Vec3 nq = random_points(1, 400 + s)[0].normalized();
        const double pq = patch_similarity(view_of(p, np), view_of(q, nq));
        CHECK(pq == patch_similarity(view_of(q, nq), view_of(p, np)));
        CHECK(pq >= 0.0);
        CHECK(pq == doctest::Approx(similarity_oracle(p, np, q, nq)).epsilon(1e-12));
        CHECK(patch_difference(view_of(p, np), view_of(q, nq)) ==
              doctest::Approx(difference_oracle(p, np, q)).epsilon(1e-12));
    }
}

TEST_CASE("projected matching") {
    const auto a = random_points(10, 6);
    const auto b = random_points(13, 7);
    const Vec3 n = Vec3(1, 2, 3).normalized();
    const auto m = match_projected(view_of(a, n), view_of(b, n));
    REQUIRE(m.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec3 pa = a[i] - a[i].dot(n) * n;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Vec3 pb = b[j] - b[j].dot(n) * n;
            const Vec3 pm = b[m[i]] - b[m[i]].dot(n) * n;
            CHECK((pa - pm).squaredNorm() <= (pa - pb).squaredNorm());
        }
    }
}

TEST_CASE("similar patch search") {
    SUBCASE("two patches") {
        const PatchGeometry g = geometry_for(cloud_of(random_points(40, 8)), 2, 9, 1);
        const KnnIndex centers(g.center_coords);
        CHECK(search_similar_patches(g, centers, 0, 8, 16) == std::vector<std::size_t>{1});
        CHECK(search_similar_patches(g, centers, 1, 8, 16) == std::vector<std::size_t>{0});
    }

    const PointCloud c = cloud_of(random_points(300, 9));
    const PatchGeometry g = geometry_for(c, 30, 9, 2);
    const KnnIndex centers(g.center_coords);

    auto oracle = [&](std::size_t target, std::size_t r, std::size_t h) {
        const auto window = knn_oracle(g.center_coords, g.center_coords[target], h, static_cast<long>(target));
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t m : window) {
            scored.emplace_back(similarity_oracle(rel_points(g, target), g.patch_normals[target], rel_points(g, m),
                                                  g.patch_normals[m]),
                                m);
        }
        std::sort(scored.begin(), scored.end());
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < std::min(r, scored.size()); ++i) out.push_back(scored[i].second);
        return out;
    };

    SUBCASE("matches the exhaustive window oracle") {
        for (std::size_t t = 0; t < 30; ++t) CHECK(search_similar_patches(g, centers, t, 8, 16) == oracle(t, 8, 16));
    }
    SUBCASE("r = h returns the whole window by similarity") {
        for (std::size_t t = 0; t < 30; t += 3) {
            const auto all = search_similar_patches(g, centers, t, 10, 10);
            CHECK(all.size() == 10);
            CHECK(all == oracle(t, 10, 10));
        }
    }
    SUBCASE("window larger than the patch set") {
        const auto all = search_similar_patches(g, centers, 4, 100, 100);
        CHECK(all.size() == 29);
        CHECK(std::find(all.begin(), all.end(), 4) == all.end());
    }
}

TEST_CASE("corresponding patch search") {
    const PointCloud c = cloud_of(random_points(300, 10));
    const PatchGeometry g = geometry_for(c, 30, 9, 2);
    const KnnIndex centers(g.center_coords);

    for (std::size_t t = 0; t < 30; ++t) CHECK(search_corresponding_patch(g.view(t), g.center_coords[t], g, centers, 16) == t);

    PatchGeometry moved = g;
    for (auto& p : moved.center_coords) p += Vec3(100, 0, 0);
    const KnnIndex moved_centers(moved.center_coords);
    for (std::size_t t = 0; t < 30; ++t) {
        CHECK(search_corresponding_patch(g.view(t), g.center_coords[t], moved, moved_centers, 30) == t);
    }

    const PatchGeometry single = geometry_for(cloud_of(random_points(12, 11)), 1, 9, 1);
    const KnnIndex single_center(single.center_coords);
    CHECK(search_corresponding_patch(g.view(0), g.center_coords[0], single, single_center, 16) == 0);
}

TEST_CASE("match_patches") {
    set_num_threads(4);
    const PointCloud cur = cloud_of(random_points(400, 12));
    const PointCloud prev = cloud_of(random_points(380, 13));
    const PatchGeometry g = geometry_for(cur, 40, 9, 1);
    const PatchGeometry gp = geometry_for(prev, 38, 9, 1);

    const auto s = match_patches(g, &gp, 8, 16, Exec::serial);
    const auto p = match_patches(g, &gp, 8, 16, Exec::parallel);
    REQUIRE(s.size() == 40);
    const KnnIndex centers(g.center_coords), prev_centers(gp.center_coords);
    for (std::size_t l = 0; l < s.size(); ++l) {
        CHECK(s[l].target == l);
        CHECK(s[l].similar_spatial == p[l].similar_spatial);
        CHECK(s[l].corresponding_temporal == p[l].corresponding_temporal);
        CHECK(s[l].similar_spatial.size() == 8);
        CHECK(std::find(s[l].similar_spatial.begin(), s[l].similar_spatial.end(), l) == s[l].similar_spatial.end());
        CHECK(s[l].similar_spatial == search_similar_patches(g, centers, l, 8, 16));
        REQUIRE(s[l].corresponding_temporal.has_value());
        CHECK(*s[l].corresponding_temporal == search_corresponding_patch(g.view(l), g.center_coords[l], gp, prev_centers, 16));
    }
    for (const auto& m : match_patches(g, nullptr, 8, 16)) CHECK_FALSE(m.corresponding_temporal.has_value());
}
