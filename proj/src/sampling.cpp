#include "stg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace stg {

std::vector<std::size_t> downsample_indices(std::size_t n, double rate, std::uint64_t seed) {
    if (!(rate > 0.0 && rate <= 1.0)) {
        throw std::invalid_argument("downsampling rate must lie in (0, 1]");
    }
    const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n))));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (count == n) return idx;

    // Partial Fisher-Yates: the first `count` slots become a uniform sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

PointCloud downsample(const PointCloud& cloud, double rate, std::uint64_t seed) {
    const auto idx = downsample_indices(cloud.size(), rate, seed);
    PointCloud out;
    out.coords.reserve(idx.size());
    for (std::size_t i : idx) out.coords.push_back(cloud.coords[i]);
    if (cloud.has_normals()) {
        out.normals.reserve(idx.size());
        for (std::size_t i : idx) out.normals.push_back(cloud.normals[i]);
    }
    if (!cloud.attributes.empty()) out.attributes = cloud.attributes.select(idx);
    return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
    PointCloud out;
    out.coords = cloud.coords;
    out.attributes = cloud.attributes;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& p : out.coords) {
        for (int c = 0; c < 3; ++c) p[c] += noise(rng);
    }
    return out;
}

}  // namespace stg
