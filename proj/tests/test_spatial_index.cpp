#include "test_support.hpp"

#include "stg/knn_index.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace stg;
using namespace stg::test;

namespace {

// Oracle: recomputes every point's distance to the chosen set from scratch.
std::vector<std::size_t> fps_oracle(const std::vector<Vec3>& pts, std::size_t m, std::size_t first) {
    std::vector<std::size_t> chosen{first};
    while (chosen.size() < m) {
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t c : chosen) d = std::min(d, (pts[i] - pts[c]).squaredNorm());
            if (d > best) {
                best = d;
                arg = i;
            }
        }
        chosen.push_back(arg);
    }
    return chosen;
}

// Integer lattice with repeated points: many exact distance ties.
std::vector<Vec3> tied_points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 6);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    return pts;
}

}  // namespace

TEST_CASE("index construction") {
    CHECK_THROWS_AS(KnnIndex(std::vector<Vec3>{}), std::invalid_argument);

    const std::vector<Vec3> one{Vec3(1, 2, 3)};
    const KnnIndex single(one);
    CHECK(single.knn(Vec3(-5, 0, 9), 1) == std::vector<std::size_t>{0});

    const auto pts = random_points(10000, 1);
    const KnnIndex a(pts), b(pts);
    CHECK(a.size() == 10000);
    for (const auto& q : random_points(20, 2)) CHECK(a.knn(q, 7) == b.knn(q, 7));
}

TEST_CASE("knn basics") {
    const auto pts = random_points(300, 4);
    const KnnIndex index(pts);
    for (std::size_t i = 0; i < 20; ++i) CHECK(index.knn(pts[i], 1).front() == i);
    CHECK_THROWS(index.knn(pts[0], 301));
    CHECK_THROWS(index.knn_excluding(0, 300));
    CHECK(index.knn_excluding(0, 299).size() == 299);
}

TEST_CASE("grid node has its four axis neighbors") {
    std::vector<Vec3> grid;
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 5; ++b) grid.push_back(Vec3(a, b, 0));
    }
    const KnnIndex index(grid);
    const std::size_t node = 2 * 5 + 2;
    const auto nn = index.knn_excluding(node, 4);
    CHECK(nn == knn_oracle(grid, grid[node], 4, static_cast<long>(node)));
    CHECK(std::set<std::size_t>(nn.begin(), nn.end()) == std::set<std::size_t>{7, 11, 13, 17});
}

TEST_CASE("knn matches exhaustive scan") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto pts = seed % 2 ? tied_points(500, seed) : random_points(500, seed);
        const KnnIndex index(pts);
        for (std::size_t i = 0; i < pts.size(); i += 7) {
            CHECK(index.knn(pts[i], 20) == knn_oracle(pts, pts[i], 20));
            CHECK(index.knn_excluding(i, 20) == knn_oracle(pts, pts[i], 20, static_cast<long>(i)));
        }
        for (const auto& q : random_points(30, seed + 100, -1.5, 7.5)) {
            CHECK(index.knn(q, 20) == knn_oracle(pts, q, 20));
            CHECK(knn_brute_force(pts, q, 20) == knn_oracle(pts, q, 20));
        }
    }
}

TEST_CASE("knn_all serial and parallel agree") {
    set_num_threads(4);
    const auto pts = tied_points(1500, 9);
    const KnnIndex index(pts);
    const auto s = knn_all(index, 10, true, Exec::serial);
    CHECK(s == knn_all(index, 10, true, Exec::parallel));
    for (std::size_t i = 0; i < pts.size(); i += 50) {
        const std::vector<std::size_t> row(s.begin() + i * 10, s.begin() + (i + 1) * 10);
        CHECK(row == knn_oracle(pts, pts[i], 10, static_cast<long>(i)));
    }
}

TEST_CASE("mean spacing") {
    const auto pts = random_points(400, 12);
    const KnnIndex index(pts);
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) sum += (pts[knn_oracle(pts, pts[i], 1, static_cast<long>(i))[0]] - pts[i]).norm();
    CHECK(mean_spacing(index, Exec::serial) == doctest::Approx(sum / pts.size()).epsilon(1e-12));
    CHECK(mean_spacing(index, Exec::serial) == mean_spacing(index, Exec::parallel));
    const std::vector<Vec3> one{Vec3::Zero()};
    CHECK(mean_spacing(KnnIndex(one)) == 0.0);
}

TEST_CASE("farthest point sampling") {
    SUBCASE("single center is the seeded random point") {
        const auto pts = random_points(100, 5);
        std::mt19937_64 rng(17);
        std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
        CHECK(farthest_point_sample(pts, 1, 17) == std::vector<std::size_t>{pick(rng)});
    }
    SUBCASE("collinear points") {
        std::vector<Vec3> line;
        for (int x = 0; x <= 10; ++x) line.push_back(Vec3(x, 0, 0));
        const auto c = farthest_point_sample_from(line, 3, 0);
        CHECK(c[1] == 10);
        CHECK(c[2] == 5);
        CHECK(c == fps_oracle(line, 3, 0));
    }
    SUBCASE("m = n selects every index once") {
        const auto pts = tied_points(60, 2);  // duplicates included
        const auto c = farthest_point_sample(pts, pts.size(), 3);
        CHECK(std::set<std::size_t>(c.begin(), c.end()).size() == pts.size());
        CHECK(c == fps_oracle(pts, pts.size(), c.front()));
    }
    SUBCASE("matches the oracle, serial and parallel") {
        set_num_threads(4);
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto pts = seed == 1 ? tied_points(800, seed) : random_points(800, seed);
            const auto oracle = fps_oracle(pts, 40, 7);
            CHECK(farthest_point_sample_from(pts, 40, 7, Exec::serial) == oracle);
            CHECK(farthest_point_sample_from(pts, 40, 7, Exec::parallel) == oracle);
        }
    }
    SUBCASE("minimum pairwise distance does not grow with m") {
        const auto pts = random_points(300, 21);
        const auto c = farthest_point_sample(pts, 60, 2);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t m = 2; m <= c.size(); ++m) {
            double mind = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = a + 1; b < m; ++b) mind = std::min(mind, (pts[c[a]] - pts[c[b]]).norm());
            }
            CHECK(mind <= prev);
            prev = mind;
        }
    }
    SUBCASE("too many centers") {
        const auto pts = random_points(5, 1);
        CHECK_THROWS_AS(farthest_point_sample(pts, 6, 1), std::invalid_argument);
    }
}
