#pragma once

#include "stg/parallel.hpp"
#include "stg/patching.hpp"
#include "stg/types.hpp"

#include <Eigen/SparseCore>

#include <span>
#include <vector>

namespace stg {

/// Undirected edge between two graph nodes (stacked patch rows).
struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct EdgeList {
    std::vector<Edge> edges;

    /// Orders each edge as (min, max), drops self-loops, sorts and removes duplicates.
    void canonicalize();
    void append(const EdgeList& other) { edges.insert(edges.end(), other.edges.begin(), other.edges.end()); }
    std::size_t size() const { return edges.size(); }
};

/// Intra-frame edges between two similar patches. Each point of `l` links to
/// the point of `m` nearest in projection onto l's tangent plane, and each
/// point of `m` to its nearest in `l` on m's plane. Node ids are the patch
/// rows offset by `l_offset` / `m_offset`. The result is canonical.
EdgeList connect_intra(const PatchView& l, std::size_t l_offset, const PatchView& m, std::size_t m_offset);

/// For each point of `current` (member order), the index of the point of
/// `previous` nearest in projection onto current's tangent plane.
/// Many-to-one matches are allowed.
std::vector<std::size_t> connect_inter(const PatchView& current, const PatchView& previous);

/// Per-row temporal partner in the previous frame's stacked patch rows;
/// kNoMatch for rows of patches without a correspondence.
struct TemporalCorrespondence {
    std::size_t patch_size = 0;
    std::vector<std::size_t> prev_row;

    std::size_t rows() const { return prev_row.size(); }
    /// (current row, previous row) for every matched row, ascending current row.
    std::vector<Edge> pairs() const;
};

/// Node attributes used for feature differences: position and unit normal.
struct NodeFeatures {
    std::span<const Vec3> positions;
    std::span<const Vec3> normals;
};

/// Feature differences and squared signal differences of connected node pairs.
struct FeaturePairSet {
    std::vector<Vec4> diff;  // [dx, dy, dz, 1 - |cos theta|]
    std::vector<double> d;   // squared position distance

    std::size_t size() const { return d.size(); }
    bool empty() const { return d.empty(); }
};

/// Pair (a, b) takes node a from `from` and node b from `to`; pass the same
/// features twice for intra-frame pairs. The coordinate part of the feature
/// is divided by `position_scale`; d stays in data units. Throws if normals
/// are missing.
FeaturePairSet compute_feature_diffs(std::span<const Edge> pairs, const NodeFeatures& from, const NodeFeatures& to,
                                     double position_scale = 1.0, Exec exec = Exec::parallel);

/// Gaussian-kernel edge weights exp(-|R f|^2).
std::vector<double> edge_weights(const Mat4& R, const FeaturePairSet& features, Exec exec = Exec::parallel);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Combinatorial Laplacian L = D - A of a weighted undirected graph.
struct SparseLaplacian {
    SparseMatrix matrix;
    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
    /// Sum over edges of a_ij (z_i - z_j)^2 computed as z^T L z.
    double quadratic_form(const Eigen::VectorXd& z) const { return z.dot(matrix * z); }
};

/// Duplicate edges keep the largest weight. Throws on out-of-range ids,
/// negative weights or misaligned inputs.
SparseLaplacian assemble_laplacian(std::size_t n, const EdgeList& edges, std::span<const double> weights);

/// Diagonal of W: sqrt(weight) on each matched row, 0 elsewhere. `weights`
/// is aligned with corr.pairs().
Eigen::VectorXd assemble_temporal_weights(const TemporalCorrespondence& corr, std::span<const double> weights);

}  // namespace stg
