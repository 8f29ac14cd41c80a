// Serial reference kernels against their OpenMP versions. Arg 0 selects
// Exec::serial, arg 1 Exec::parallel.
#include "stg/geometry.hpp"
#include "stg/graph.hpp"
#include "stg/knn_index.hpp"
#include "stg/metric_learning.hpp"
#include "stg/patching.hpp"
#include "stg/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace stg;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

PointCloud sphere(std::size_t n) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.coords.push_back(Vec3(g(rng), g(rng), g(rng)).normalized() + 0.01 * Vec3(g(rng), g(rng), g(rng)));
    return c;
}

const PointCloud& cloud() {
    static const PointCloud c = sphere(20000);
    return c;
}

void BM_knn_all(benchmark::State& state) {
    const KnnIndex index(cloud().coords);
    for (auto _ : state) benchmark::DoNotOptimize(knn_all(index, 30, true, exec_of(state)));
    label(state);
}

void BM_estimate_normals(benchmark::State& state) {
    const KnnIndex index(cloud().coords);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_normals(cloud(), index, 15, exec_of(state)));
    label(state);
}

void BM_farthest_point_sample(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(farthest_point_sample_from(cloud().coords, 1000, 0, exec_of(state)));
    label(state);
}

void BM_glr_gradient(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FeaturePairSet fp;
    for (int i = 0; i < 200000; ++i) {
        fp.diff.push_back(Vec4(u(rng), u(rng), u(rng), std::abs(u(rng))));
        fp.d.push_back(std::abs(u(rng)));
    }
    const Mat4 R = Mat4::Identity();
    for (auto _ : state) benchmark::DoNotOptimize(glr_gradient(R, fp, exec_of(state)));
    label(state);
}

void BM_spmv(benchmark::State& state) {
    const std::size_t n = 200000;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    EdgeList e;
    for (std::size_t i = 0; i < 8 * n; ++i) {
        const std::size_t a = node(rng), b = node(rng);
        if (a != b) e.edges.push_back({a, b});
    }
    const SparseLaplacian L = assemble_laplacian(n, e, std::vector<double>(e.size(), 0.5));
    const Eigen::VectorXd x = Eigen::VectorXd::Random(static_cast<Eigen::Index>(n));
    Eigen::VectorXd y;
    for (auto _ : state) {
        spmv(L.matrix, x, y, exec_of(state));
        benchmark::DoNotOptimize(y.data());
    }
    label(state);
}

void BM_match_patches(benchmark::State& state) {
    const PatchSet ps = build_patches(cloud(), 2000, 29, 1);
    const PatchGeometry g = make_patch_geometry(ps, estimate_normals(cloud(), 15).cloud);
    for (auto _ : state) benchmark::DoNotOptimize(match_patches(g, &g, 8, 16, exec_of(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_knn_all)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_estimate_normals)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_farthest_point_sample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_glr_gradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_spmv)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_match_patches)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
