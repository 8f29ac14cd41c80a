#include "stg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stg {

void EdgeList::canonicalize() {
    std::vector<Edge> kept;
    kept.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.a == e.b) continue;
        kept.push_back(e.a < e.b ? e : Edge{e.b, e.a});
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    edges = std::move(kept);
}

EdgeList connect_intra(const PatchView& l, std::size_t l_offset, const PatchView& m, std::size_t m_offset) {
    EdgeList out;
    out.edges.reserve(l.points.size() + m.points.size());
    const auto lm = match_projected(l, m);
    for (std::size_t i = 0; i < lm.size(); ++i) out.edges.push_back({l_offset + i, m_offset + lm[i]});
    const auto ml = match_projected(m, l);
    for (std::size_t j = 0; j < ml.size(); ++j) out.edges.push_back({l_offset + ml[j], m_offset + j});
    out.canonicalize();
    return out;
}

std::vector<std::size_t> connect_inter(const PatchView& current, const PatchView& previous) {
    return match_projected(current, previous);
}

std::vector<Edge> TemporalCorrespondence::pairs() const {
    std::vector<Edge> out;
    for (std::size_t row = 0; row < prev_row.size(); ++row) {
        if (prev_row[row] != kNoMatch) out.push_back({row, prev_row[row]});
    }
    return out;
}

FeaturePairSet compute_feature_diffs(std::span<const Edge> pairs, const NodeFeatures& from, const NodeFeatures& to,
                                     double position_scale, Exec exec) {
    if (!(position_scale > 0.0)) throw std::invalid_argument("feature position scale must be positive");
    const double inv_scale = 1.0 / position_scale;
    if (from.normals.size() != from.positions.size() || to.normals.size() != to.positions.size()) {
        throw std::invalid_argument("feature differences need a normal for every node");
    }
    FeaturePairSet out;
    out.diff.resize(pairs.size());
    out.d.resize(pairs.size());
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const Edge& e = pairs[p];
        const Vec3 dv = from.positions[e.a] - to.positions[e.b];
        const Vec3& ni = from.normals[e.a];
        const Vec3& nj = to.normals[e.b];
        const double cos_theta = ni.dot(nj) / (ni.norm() * nj.norm());
        out.diff[p] << inv_scale * dv, 1.0 - std::min(1.0, std::abs(cos_theta));
        out.d[p] = dv.squaredNorm();
    }
    return out;
}

std::vector<double> edge_weights(const Mat4& R, const FeaturePairSet& features, Exec exec) {
    std::vector<double> w(features.size());
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = std::exp(-(R * features.diff[p]).squaredNorm());
    return w;
}

SparseLaplacian assemble_laplacian(std::size_t n, const EdgeList& edges, std::span<const double> weights) {
    if (weights.size() != edges.size()) throw std::invalid_argument("edge and weight counts differ");

    // Canonical (min, max) keys; duplicates resolved to the largest weight.
    std::vector<std::pair<Edge, double>> items;
    items.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        Edge ed = edges.edges[e];
        if (ed.a >= n || ed.b >= n) throw std::out_of_range("edge endpoint out of range");
        if (!(weights[e] >= 0.0)) throw std::invalid_argument("edge weights must be non-negative");
        if (ed.a == ed.b) continue;
        if (ed.a > ed.b) std::swap(ed.a, ed.b);
        items.emplace_back(ed, weights[e]);
    }
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * items.size());
    for (std::size_t i = 0; i < items.size();) {
        const Edge e = items[i].first;
        double w = items[i].second;
        std::size_t j = i + 1;
        for (; j < items.size() && items[j].first == e; ++j) w = std::max(w, items[j].second);
        i = j;
        const auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
        trips.emplace_back(a, a, w);
        trips.emplace_back(b, b, w);
        trips.emplace_back(a, b, -w);
        trips.emplace_back(b, a, -w);
    }
    SparseLaplacian L;
    L.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    L.matrix.setFromTriplets(trips.begin(), trips.end());
    return L;
}

Eigen::VectorXd assemble_temporal_weights(const TemporalCorrespondence& corr, std::span<const double> weights) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(corr.rows()));
    std::size_t p = 0;
    for (std::size_t row = 0; row < corr.rows(); ++row) {
        if (corr.prev_row[row] == kNoMatch) continue;
        if (p >= weights.size()) throw std::invalid_argument("fewer temporal weights than matched rows");
        diag[static_cast<Eigen::Index>(row)] = std::sqrt(weights[p++]);
    }
    if (p != weights.size()) throw std::invalid_argument("more temporal weights than matched rows");
    return diag;
}

}  // namespace stg
