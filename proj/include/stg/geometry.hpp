#pragma once

#include "stg/knn_index.hpp"
#include "stg/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace stg {

/// Plane through `origin` with unit `normal`.
struct TangentFrame {
    Vec3 origin = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
};

struct PlaneProjection {
    Vec3 projection;
    double signed_distance;
};

/// Orthogonal projection of `point` onto the plane, and its signed height
/// above it along the normal.
inline PlaneProjection project_distance(const TangentFrame& frame, const Vec3& point) {
    const double d = (point - frame.origin).dot(frame.normal);
    return {point - d * frame.normal, d};
}

inline constexpr std::size_t kDefaultNormalNeighbors = 15;

struct NormalEstimate {
    PointCloud cloud;                      // input with normals filled in
    std::vector<std::uint8_t> degenerate;  // 1 where the (0,0,1) fallback was used
    std::size_t degenerate_count = 0;
};

/// Unoriented PCA normals: the smallest-eigenvalue eigenvector of the
/// covariance of each point's k_n nearest neighbors (self included).
/// Requires n > k_n >= 3.
NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k_n = kDefaultNormalNeighbors,
                                Exec exec = Exec::parallel);

/// Same, reusing a prebuilt index over cloud.coords.
NormalEstimate estimate_normals(const PointCloud& cloud, const KnnIndex& index, std::size_t k_n,
                                Exec exec = Exec::parallel);

}  // namespace stg
