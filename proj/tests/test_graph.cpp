#include "test_support.hpp"

#include "stg/graph.hpp"

#include <Eigen/Dense>
#include <doctest.h>

using namespace stg;
using namespace stg::test;

namespace {

PatchView view_of(const std::vector<Vec3>& pts, const Vec3& normal) { return {pts, {Vec3::Zero(), normal}}; }

std::size_t projected_nn_oracle(const Vec3& p, const std::vector<Vec3>& others, const Vec3& n) {
    const Vec3 pp = p - p.dot(n) * n;
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < others.size(); ++j) {
        const double d = (pp - (others[j] - others[j].dot(n) * n)).squaredNorm();
        if (d < best) {
            best = d;
            arg = j;
        }
    }
    return arg;
}

Eigen::MatrixXd dense(const SparseLaplacian& L) { return Eigen::MatrixXd(L.matrix); }

}  // namespace

TEST_CASE("edge list canonicalization") {
    EdgeList e;
    e.edges = {{3, 1}, {1, 3}, {2, 2}, {0, 5}, {1, 3}};
    e.canonicalize();
    CHECK(e.edges == std::vector<Edge>{{0, 5}, {1, 3}});
}

TEST_CASE("intra-frame connectivity") {
    SUBCASE("identical patches connect each point to its twin") {
        const auto p = random_points(10, 1);
        const EdgeList e = connect_intra(view_of(p, Vec3::UnitZ()), 0, view_of(p, Vec3::UnitZ()), 10);
        REQUIRE(e.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) CHECK(e.edges[i] == Edge{i, i + 10});
    }
    SUBCASE("flat patches side by side match the exhaustive scan") {
        std::vector<Vec3> left, right;
        for (const auto& q : random_points(8, 2, 0.0, 1.0)) left.push_back(Vec3(q.x(), q.y(), 0));
        for (const auto& q : random_points(8, 3, 0.0, 1.0)) right.push_back(Vec3(q.x() + 0.5, q.y(), 0));
        const EdgeList e = connect_intra(view_of(left, Vec3::UnitZ()), 0, view_of(right, Vec3::UnitZ()), 8);
        EdgeList expected;
        for (std::size_t i = 0; i < 8; ++i) expected.edges.push_back({i, 8 + projected_nn_oracle(left[i], right, Vec3::UnitZ())});
        for (std::size_t j = 0; j < 8; ++j) expected.edges.push_back({projected_nn_oracle(right[j], left, Vec3::UnitZ()), 8 + j});
        expected.canonicalize();
        CHECK(e.edges == expected.edges);
    }
    SUBCASE("edge count bounds") {
        for (std::uint64_t s = 0; s < 30; ++s) {
            const auto a = random_points(10, 10 + s), b = random_points(10, 50 + s);
            const EdgeList e = connect_intra(view_of(a, a[0].normalized()), 0, view_of(b, b[0].normalized()), 10);
            CHECK(e.size() >= 10);
            CHECK(e.size() <= 20);
        }
    }
}

TEST_CASE("inter-frame connectivity") {
    const auto p = random_points(12, 4);
    const Vec3 n = Vec3(1, -1, 2).normalized();
    std::vector<std::size_t> identity(12);
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(connect_inter(view_of(p, n), view_of(p, n)) == identity);

    std::vector<Vec3> lifted;
    for (const auto& q : p) lifted.push_back(q + 0.7 * n);
    CHECK(connect_inter(view_of(p, n), view_of(lifted, n)) == identity);

    const auto other = random_points(9, 5);
    const auto m = connect_inter(view_of(p, n), view_of(other, n));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(m[i] == projected_nn_oracle(p[i], other, n));
}

TEST_CASE("feature differences") {
    const std::vector<Vec3> pos{Vec3(0, 0, 0), Vec3(1, 2, 2), Vec3(0, 0, 0), Vec3(3, 0, 0)};
    const std::vector<Vec3> nrm{Vec3::UnitZ(), Vec3::UnitZ(), -Vec3::UnitZ(), Vec3::UnitX()};
    const NodeFeatures f{pos, nrm};
    const std::vector<Edge> pairs{{0, 0}, {0, 1}, {0, 2}, {0, 3}};
    const FeaturePairSet fp = compute_feature_diffs(pairs, f, f);
    CHECK(fp.diff[0] == Vec4::Zero());
    CHECK(fp.d[0] == 0.0);
    CHECK(fp.diff[1] == Vec4(-1, -2, -2, 0));
    CHECK(fp.d[1] == 9.0);
    CHECK(fp.diff[2][3] == 0.0);  // anti-parallel
    CHECK(fp.diff[3][3] == 1.0);  // orthogonal

    const FeaturePairSet scaled = compute_feature_diffs(pairs, f, f, 2.0);
    CHECK(scaled.diff[1] == Vec4(-0.5, -1, -1, 0));
    CHECK(scaled.d[1] == 9.0);

    const NodeFeatures bare{pos, {}};
    CHECK_THROWS(compute_feature_diffs(pairs, bare, bare));
    CHECK_THROWS(compute_feature_diffs(pairs, f, f, 0.0));

    set_num_threads(4);
    const auto many_pos = random_points(500, 6);
    std::vector<Vec3> many_nrm;
    for (const auto& q : random_points(500, 7)) many_nrm.push_back(q.normalized());
    std::vector<Edge> many_pairs;
    for (std::size_t i = 0; i < 2000; ++i) many_pairs.push_back({i % 500, (i * 7 + 3) % 500});
    const NodeFeatures mf{many_pos, many_nrm};
    const auto a = compute_feature_diffs(many_pairs, mf, mf, 1.0, Exec::serial);
    const auto b = compute_feature_diffs(many_pairs, mf, mf, 1.0, Exec::parallel);
    CHECK(a.diff == b.diff);
    CHECK(a.d == b.d);
}

TEST_CASE("edge weights") {
    FeaturePairSet fp;
    fp.diff = {Vec4::Zero(), Vec4(1, 0, 0, 0), Vec4(0.3, -0.2, 0.1, 0.5)};
    fp.d = {0, 0, 0};
    const auto w = edge_weights(Mat4::Identity(), fp);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    Mat4 R = Mat4::Identity();
    R(0, 1) = 0.4;
    R(2, 3) = -0.3;
    const auto w1 = edge_weights(R, fp);
    const auto w2 = edge_weights(2.0 * R, fp);
    for (std::size_t i = 0; i < w1.size(); ++i) {
        CHECK(w2[i] == doctest::Approx(std::pow(w1[i], 4)).epsilon(1e-12));
        CHECK(w1[i] > 0.0);
        CHECK(w1[i] <= 1.0);
    }
}

TEST_CASE("laplacian assembly") {
    SUBCASE("single edge") {
        EdgeList e;
        e.edges = {{0, 1}};
        const std::vector<double> w{0.25};
        const Eigen::MatrixXd L = dense(assemble_laplacian(2, e, w));
        CHECK(L(0, 0) == 0.25);
        CHECK(L(1, 1) == 0.25);
        CHECK(L(0, 1) == -0.25);
        CHECK(L(1, 0) == -0.25);
    }
    SUBCASE("empty graph") {
        const Eigen::MatrixXd L = dense(assemble_laplacian(4, EdgeList{}, {}));
        CHECK(L.isZero(0.0));
    }
    SUBCASE("duplicates keep the largest weight") {
        EdgeList e;
        e.edges = {{0, 2}, {2, 0}, {0, 2}};
        const std::vector<double> w{0.1, 0.7, 0.3};
        const Eigen::MatrixXd L = dense(assemble_laplacian(3, e, w));
        CHECK(L(0, 2) == -0.7);
        CHECK(L(0, 0) == 0.7);
    }
    SUBCASE("invalid input") {
        EdgeList e;
        e.edges = {{0, 3}};
        CHECK_THROWS(assemble_laplacian(3, e, std::vector<double>{1.0}));
        e.edges = {{0, 1}};
        CHECK_THROWS(assemble_laplacian(3, e, std::vector<double>{-1.0}));
        CHECK_THROWS(assemble_laplacian(3, e, std::vector<double>{}));
    }
    SUBCASE("structure, quadratic form and spectrum") {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<std::size_t> node(0, 59);
        std::uniform_real_distribution<double> weight(0.0, 1.0);
        EdgeList e;
        std::vector<double> w;
        for (int i = 0; i < 300; ++i) {
            const std::size_t a = node(rng), b = node(rng);
            if (a == b) continue;
            e.edges.push_back({a, b});
            w.push_back(weight(rng));
        }
        const SparseLaplacian L = assemble_laplacian(60, e, w);
        const Eigen::MatrixXd D = dense(L);
        CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 60; ++i) {
            CHECK(std::abs(D.row(i).sum()) <= 1e-10);
            for (int j = 0; j < 60; ++j) {
                if (i != j) CHECK(D(i, j) <= 0.0);
            }
        }
        const Eigen::VectorXd z = Eigen::VectorXd::Random(60);
        double explicit_sum = 0.0;
        for (int i = 0; i < 60; ++i) {
            for (int j = i + 1; j < 60; ++j) explicit_sum += -D(i, j) * (z[i] - z[j]) * (z[i] - z[j]);
        }
        CHECK(L.quadratic_form(z) == doctest::Approx(explicit_sum).epsilon(1e-10));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("temporal weights") {
    TemporalCorrespondence corr;
    corr.patch_size = 3;
    corr.prev_row = {4, 5, 4, kNoMatch, kNoMatch, kNoMatch, 0, 1, 2};
    const auto pairs = corr.pairs();
    REQUIRE(pairs.size() == 6);
    CHECK(pairs[3] == Edge{6, 0});

    const Eigen::VectorXd ones = assemble_temporal_weights(corr, std::vector<double>(6, 1.0));
    CHECK(ones == (Eigen::VectorXd(9) << 1, 1, 1, 0, 0, 0, 1, 1, 1).finished());

    const std::vector<double> w{0.25, 1, 1, 0.5, 1, 0.04};
    const Eigen::VectorXd W = assemble_temporal_weights(corr, w);
    CHECK(W[0] == 0.5);
    CHECK(W[8] == doctest::Approx(0.2).epsilon(1e-15));
    const std::vector<std::size_t> matched{0, 1, 2, 6, 7, 8};
    for (std::size_t i = 0; i < matched.size(); ++i) CHECK(W[matched[i]] * W[matched[i]] == doctest::Approx(w[i]).epsilon(1e-15));

    CHECK_THROWS(assemble_temporal_weights(corr, std::vector<double>(5, 1.0)));
}
