#pragma once

#include "stg/parallel.hpp"
#include "stg/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace stg {

/// Exact k-nearest-neighbor index (kd-tree) over a fixed set of points.
///
/// Results are ordered by ascending squared Euclidean distance, ties broken by
/// ascending point index, and always agree with knn_brute_force.
class KnnIndex {
  public:
    explicit KnnIndex(std::span<const Vec3> points);

    std::size_t size() const { return points_.size(); }
    const Vec3& point(std::size_t i) const { return points_[i]; }

    /// The k nearest points to `query`. Requires k <= size().
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

    /// The k nearest points to point `self`, excluding `self` itself.
    /// Requires k <= size() - 1.
    std::vector<std::size_t> knn_excluding(std::size_t self, std::size_t k) const;

  private:
    struct Node {
        std::uint32_t begin, end;  // range in order_ (leaf) or split info
        std::int32_t left = -1, right = -1;
        int axis = -1;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    std::vector<std::size_t> search(const Vec3& query, std::size_t k, std::optional<std::size_t> skip) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

/// O(n) scan with the same ordering contract as KnnIndex.
std::vector<std::size_t> knn_brute_force(std::span<const Vec3> points, const Vec3& query, std::size_t k,
                                         std::optional<std::size_t> skip = std::nullopt);

/// k nearest neighbors for every point of the index (self included as the
/// first result unless `exclude_self`). Row-major, k entries per point.
std::vector<std::size_t> knn_all(const KnnIndex& index, std::size_t k, bool exclude_self,
                                 Exec exec = Exec::parallel);

/// Mean distance from each point to its nearest other point; 0 for fewer
/// than two points. Summed in fixed chunks so the result is independent of
/// the thread count.
double mean_spacing(const KnnIndex& index, Exec exec = Exec::parallel);

/// Greedy farthest point sampling starting at `first`. Each subsequent pick
/// maximizes the distance to the already chosen set; ties go to the lowest
/// index.
std::vector<std::size_t> farthest_point_sample_from(std::span<const Vec3> points, std::size_t m,
                                                    std::size_t first, Exec exec = Exec::parallel);

/// As above with the first center drawn uniformly at random from `seed`.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t m, std::uint64_t seed,
                                               Exec exec = Exec::parallel);

}  // namespace stg
