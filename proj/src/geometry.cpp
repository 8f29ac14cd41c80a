#include "stg/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace stg {

NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k_n, Exec exec) {
    if (cloud.empty()) throw std::invalid_argument("normal estimation needs a nonempty cloud");
    const KnnIndex index(cloud.coords);
    return estimate_normals(cloud, index, k_n, exec);
}

NormalEstimate estimate_normals(const PointCloud& cloud, const KnnIndex& index, std::size_t k_n, Exec exec) {
    const std::size_t n = cloud.size();
    if (k_n < 3 || n <= k_n) {
        throw std::invalid_argument("normal estimation needs n > k_n >= 3 (n = " + std::to_string(n) +
                                    ", k_n = " + std::to_string(k_n) + ")");
    }
    NormalEstimate out;
    out.cloud = cloud;
    out.cloud.normals.assign(n, Vec3::UnitZ());
    out.degenerate.assign(n, 0);

    STG_OMP_FOR_IF(is_parallel(exec))
    for (std::size_t i = 0; i < n; ++i) {
        const auto nn = index.knn(cloud.coords[i], k_n);
        Vec3 mean = Vec3::Zero();
        for (std::size_t j : nn) mean += cloud.coords[j];
        mean /= static_cast<double>(nn.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (std::size_t j : nn) {
            const Vec3 d = cloud.coords[j] - mean;
            cov.noalias() += d * d.transpose();
        }
        // Coincident neighborhoods leave only rounding noise in the covariance.
        if (cov.trace() <= 1e-24 * (1.0 + mean.squaredNorm())) {
            out.degenerate[i] = 1;
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        out.cloud.normals[i] = eig.eigenvectors().col(0).normalized();  // eigenvalues ascend
    }
    for (auto d : out.degenerate) out.degenerate_count += d;
    return out;
}

}  // namespace stg
