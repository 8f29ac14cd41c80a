#pragma once

#include "stg/geometry.hpp"
#include "stg/knn_index.hpp"
#include "stg/parallel.hpp"
#include "stg/point_cloud.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace stg {

inline constexpr std::size_t kNoMatch = std::numeric_limits<std::size_t>::max();

/// M patches of (k+1) points: a farthest-point-sampled center followed by its
/// k nearest neighbors. Rows of the stacked patch matrix are numbered
/// patch * (k+1) + member, which is also the node numbering of the patch
/// graph.
struct PatchSet {
    std::size_t k = 0;
    std::vector<std::size_t> centers;  // point index per patch
    std::vector<std::size_t> members;  // flat, (k+1) per patch, center first
    std::vector<Vec3> center_coords;

    std::size_t patch_count() const { return centers.size(); }
    std::size_t patch_size() const { return k + 1; }
    std::size_t rows() const { return members.size(); }
    std::size_t row(std::size_t patch, std::size_t member) const { return patch * (k + 1) + member; }
    std::size_t patch_of_row(std::size_t row) const { return row / (k + 1); }
    std::span<const std::size_t> patch(std::size_t l) const { return {members.data() + l * (k + 1), k + 1}; }
};

/// Requires n >= k+1 and 1 <= m <= n.
PatchSet build_patches(const PointCloud& cloud, std::size_t m, std::size_t k, std::uint64_t seed,
                       Exec exec = Exec::parallel);
PatchSet build_patches(const PointCloud& cloud, const KnnIndex& index, std::size_t m, std::size_t k,
                       std::uint64_t seed, Exec exec = Exec::parallel);

/// Stacked center-relative patch coordinates S*U - C, one row per patch member.
std::vector<Vec3> stack_patches(const PatchSet& patches, std::span<const Vec3> coords);

/// A patch as seen by the similarity and matching routines: its points and
/// the tangent plane at its center. All comparisons are made on
/// `points[i] - frame.origin`, so two patches are compared by shape,
/// independent of where they sit in space.
struct PatchView {
    std::span<const Vec3> points;
    TangentFrame frame;
};

/// For every point of `a`, the index of the point of `b` whose projection onto
/// a's tangent plane is nearest to its own (ties: lowest index).
std::vector<std::size_t> match_projected(const PatchView& a, const PatchView& b);

/// Root-mean-square difference of heights above a's tangent plane between
/// a's points and their projected matches in b.
double patch_difference(const PatchView& a, const PatchView& b);

/// Symmetric patch dissimilarity sqrt((D_ab^2 + D_ba^2) / 2); 0 for identical shapes.
double patch_similarity(const PatchView& a, const PatchView& b);

/// Per-frame patch data needed for search and graph construction.
struct PatchGeometry {
    std::size_t patch_size = 0;
    std::vector<Vec3> rel;            // stacked S*U - C
    std::vector<Vec3> row_normals;    // normal of the member point on each row
    std::vector<Vec3> center_coords;  // per patch
    std::vector<Vec3> patch_normals;  // normal at each patch center

    std::size_t patch_count() const { return center_coords.size(); }
    PatchView view(std::size_t l) const {
        return {{rel.data() + l * patch_size, patch_size}, {Vec3::Zero(), patch_normals[l]}};
    }
};

/// `cloud` must carry normals.
PatchGeometry make_patch_geometry(const PatchSet& patches, const PointCloud& cloud);

/// The r patches most similar to `target` among the patches whose centers are
/// the h nearest to the target's center (target excluded). Ordered by
/// similarity, ties by ascending id. `center_index` indexes center_coords.
std::vector<std::size_t> search_similar_patches(const PatchGeometry& geometry, const KnnIndex& center_index,
                                                std::size_t target, std::size_t r, std::size_t h);

/// The previous-frame patch most similar to `target` among those whose
/// centers are the h nearest to `target_center`. `prev_center_index` indexes
/// prev.center_coords.
std::size_t search_corresponding_patch(const PatchView& target, const Vec3& target_center,
                                       const PatchGeometry& prev, const KnnIndex& prev_center_index,
                                       std::size_t h);

struct PatchMatch {
    std::size_t target = 0;
    std::vector<std::size_t> similar_spatial;
    std::optional<std::size_t> corresponding_temporal;
};

/// Runs both searches for every patch of the frame.
std::vector<PatchMatch> match_patches(const PatchGeometry& current, const PatchGeometry* previous, std::size_t r,
                                      std::size_t h, Exec exec = Exec::parallel);

}  // namespace stg
