#include "stg/patching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stg {

PatchSet build_patches(const PointCloud& cloud, std::size_t m, std::size_t k, std::uint64_t seed, Exec exec) {
    if (cloud.size() < k + 1) {
        throw std::invalid_argument("patches of " + std::to_string(k + 1) + " points need at least that many points (n = " +
                                    std::to_string(cloud.size()) + ")");
    }
    const KnnIndex index(cloud.coords);
    return build_patches(cloud, index, m, k, seed, exec);
}

PatchSet build_patches(const PointCloud& cloud, const KnnIndex& index, std::size_t m, std::size_t k,
                       std::uint64_t seed, Exec exec) {
    const std::size_t n = cloud.size();
    if (n < k + 1) {
        throw std::invalid_argument("patches of " + std::to_string(k + 1) + " points need at least that many points (n = " +
                                    std::to_string(n) + ")");
    }
    if (m == 0 || m > n) throw std::invalid_argument("patch count must lie in [1, n]");

    PatchSet ps;
    ps.k = k;
    ps.centers = farthest_point_sample(cloud.coords, m, seed, exec);
    ps.members.resize(m * (k + 1));
    ps.center_coords.resize(m);
    STG_OMP_FOR_IF(is_parallel(exec))
    for (std::size_t l = 0; l < m; ++l) {
        const std::size_t c = ps.centers[l];
        const auto nn = index.knn_excluding(c, k);
        std::size_t* row = ps.members.data() + l * (k + 1);
        row[0] = c;
        std::copy(nn.begin(), nn.end(), row + 1);
        ps.center_coords[l] = cloud.coords[c];
    }
    return ps;
}

std::vector<Vec3> stack_patches(const PatchSet& patches, std::span<const Vec3> coords) {
    std::vector<Vec3> rel(patches.rows());
    for (std::size_t row = 0; row < rel.size(); ++row) {
        rel[row] = coords[patches.members[row]] - patches.center_coords[patches.patch_of_row(row)];
    }
    return rel;
}

namespace {

// In-plane coordinates of (p - origin) in a's frame are obtained by removing
// the normal component; the squared distance between two projections is
// |u - v|^2 with u, v the projected vectors.
inline Vec3 in_plane(const Vec3& rel, const Vec3& normal) { return rel - rel.dot(normal) * normal; }

}  // namespace

std::vector<std::size_t> match_projected(const PatchView& a, const PatchView& b) {
    const Vec3& na = a.frame.normal;
    std::vector<Vec3> pb(b.points.size());
    for (std::size_t j = 0; j < b.points.size(); ++j) pb[j] = in_plane(b.points[j] - b.frame.origin, na);

    std::vector<std::size_t> match(a.points.size(), 0);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const Vec3 pa = in_plane(a.points[i] - a.frame.origin, na);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pb.size(); ++j) {
            const double d2 = (pa - pb[j]).squaredNorm();
            if (d2 < best) {
                best = d2;
                match[i] = j;
            }
        }
    }
    return match;
}

double patch_difference(const PatchView& a, const PatchView& b) {
    if (a.points.empty() || b.points.empty()) return 0.0;
    const auto match = match_projected(a, b);
    const Vec3& na = a.frame.normal;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const double da = (a.points[i] - a.frame.origin).dot(na);
        const double db = (b.points[match[i]] - b.frame.origin).dot(na);
        sum += (da - db) * (da - db);
    }
    return std::sqrt(sum / static_cast<double>(a.points.size()));
}

double patch_similarity(const PatchView& a, const PatchView& b) {
    const double ab = patch_difference(a, b);
    const double ba = patch_difference(b, a);
    return std::sqrt(0.5 * (ab * ab + ba * ba));
}

PatchGeometry make_patch_geometry(const PatchSet& patches, const PointCloud& cloud) {
    if (!cloud.has_normals()) throw std::invalid_argument("patch geometry needs point normals");
    PatchGeometry g;
    g.patch_size = patches.patch_size();
    g.rel = stack_patches(patches, cloud.coords);
    g.row_normals.resize(patches.rows());
    for (std::size_t row = 0; row < patches.rows(); ++row) g.row_normals[row] = cloud.normals[patches.members[row]];
    g.center_coords = patches.center_coords;
    g.patch_normals.resize(patches.patch_count());
    for (std::size_t l = 0; l < patches.patch_count(); ++l) g.patch_normals[l] = cloud.normals[patches.centers[l]];
    return g;
}

namespace {

std::vector<std::size_t> rank_by_similarity(const PatchView& target, const PatchGeometry& pool,
                                            std::span<const std::size_t> candidates, std::size_t keep) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(candidates.size());
    for (std::size_t c : candidates) scored.emplace_back(patch_similarity(target, pool.view(c)), c);
    std::sort(scored.begin(), scored.end());
    keep = std::min(keep, scored.size());
    std::vector<std::size_t> out(keep);
    for (std::size_t i = 0; i < keep; ++i) out[i] = scored[i].second;
    return out;
}

}  // namespace

std::vector<std::size_t> search_similar_patches(const PatchGeometry& geometry, const KnnIndex& center_index,
                                                std::size_t target, std::size_t r, std::size_t h) {
    const std::size_t m = geometry.patch_count();
    if (m < 2) throw std::invalid_argument("similar patch search needs at least two patches");
    const auto window = center_index.knn_excluding(target, std::min(h, m - 1));
    return rank_by_similarity(geometry.view(target), geometry, window, r);
}

std::size_t search_corresponding_patch(const PatchView& target, const Vec3& target_center, const PatchGeometry& prev,
                                       const KnnIndex& prev_center_index, std::size_t h) {
    const std::size_t m = prev.patch_count();
    if (m == 0) throw std::invalid_argument("previous frame has no patches");
    const auto window = prev_center_index.knn(target_center, std::clamp<std::size_t>(h, 1, m));
    return rank_by_similarity(target, prev, window, 1).front();
}

std::vector<PatchMatch> match_patches(const PatchGeometry& current, const PatchGeometry* previous, std::size_t r,
                                      std::size_t h, Exec exec) {
    const std::size_t m = current.patch_count();
    std::vector<PatchMatch> matches(m);
    if (m == 0) return matches;
    const KnnIndex centers(current.center_coords);
    std::optional<KnnIndex> prev_centers;
    if (previous && previous->patch_count() > 0) prev_centers.emplace(previous->center_coords);

    STG_OMP_FOR_IF(is_parallel(exec))
    for (std::size_t l = 0; l < m; ++l) {
        PatchMatch& pm = matches[l];
        pm.target = l;
        if (m >= 2) pm.similar_spatial = search_similar_patches(current, centers, l, r, h);
        if (prev_centers) {
            pm.corresponding_temporal =
                search_corresponding_patch(current.view(l), current.center_coords[l], *previous, *prev_centers, h);
        }
    }
    return matches;
}

}  // namespace stg
