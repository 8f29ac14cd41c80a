#pragma once

#include "stg/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace stg {

/// Indices of ceil(rate * n) points drawn uniformly without replacement,
/// returned in ascending order.
std::vector<std::size_t> downsample_indices(std::size_t n, double rate, std::uint64_t seed);

/// Random subset of ceil(rate * n) points. rate must lie in (0, 1].
PointCloud downsample(const PointCloud& cloud, double rate, std::uint64_t seed);

/// Adds i.i.d. N(0, sigma^2) to every coordinate component. Normals are
/// dropped since they no longer describe the perturbed surface.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

}  // namespace stg
