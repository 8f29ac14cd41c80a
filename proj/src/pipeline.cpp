#include "stg/pipeline.hpp"

#include "stg/geometry.hpp"
#include "stg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stg {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::full: return "full";
        case Mode::baseline1: return "baseline1";
        case Mode::baseline2: return "baseline2";
    }
    return "full";
}

Mode parse_mode(const std::string& name) {
    if (name == "full") return Mode::full;
    if (name == "baseline1") return Mode::baseline1;
    if (name == "baseline2") return Mode::baseline2;
    throw std::invalid_argument("unknown mode '" + name + "' (expected full, baseline1 or baseline2)");
}

void DenoiseConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(lambda1 >= 0.0, "lambda1 must be >= 0");
    require(lambda2 >= 0.0, "lambda2 must be >= 0");
    require(bound > 0.0, "trace bound C must be > 0");
    require(pg_step > 0.0, "pg step must be > 0");
    require(pg_max_iters > 0, "pg max iterations must be > 0");
    require(pg_rel_tol > 0.0, "pg tolerance must be > 0");
    require(k >= 1, "k must be >= 1");
    require(patch_fraction > 0.0 && patch_fraction <= 1.0, "patch fraction must lie in (0, 1]");
    require(r >= 1, "r must be >= 1");
    require(h >= 1, "h must be >= 1");
    require(k_n >= 3, "k_n must be >= 3");
    require(feature_scale >= 0.0, "feature scale must be >= 0");
    require(outer_max_iters > 0, "outer max iterations must be > 0");
    require(outer_rel_tol > 0.0, "outer tolerance must be > 0");
    require(cg_tol > 0.0, "cg tolerance must be > 0");
    require(cg_max_iters >= 0, "cg max iterations must be >= 0");
}

std::size_t DenoiseConfig::patch_count(std::size_t n) const {
    const auto m = static_cast<std::size_t>(std::ceil(patch_fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n, 1));
}

namespace {

nlohmann::json matrix_json(const Mat4& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
    return rows;
}

// Normals, patches and matches for a cloud, computed on its own coordinates.
struct FrameGraphInputs {
    PatchSet patches;
    PatchGeometry geometry;
    double scale = 1.0;  // divisor for position features
};

FrameGraphInputs prepare(const PointCloud& cloud, const DenoiseConfig& cfg) {
    const KnnIndex index(cloud.coords);
    const NormalEstimate normals = estimate_normals(cloud, index, cfg.k_n, cfg.exec);
    FrameGraphInputs in;
    in.patches = build_patches(cloud, index, cfg.patch_count(cloud.size()), cfg.k, cfg.seed, cfg.exec);
    in.geometry = make_patch_geometry(in.patches, normals.cloud);
    if (cfg.feature_scale > 0.0) {
        const double spacing = mean_spacing(index, cfg.exec);
        if (spacing > 0.0) in.scale = cfg.feature_scale * spacing;
    }
    return in;
}

EdgeList spatial_edges(const PatchGeometry& g, const std::vector<PatchMatch>& matches, Exec exec) {
    std::vector<EdgeList> per_patch(matches.size());
    STG_OMP_FOR_IF(is_parallel(exec))
    for (std::size_t l = 0; l < matches.size(); ++l) {
        for (std::size_t m : matches[l].similar_spatial) {
            per_patch[l].append(connect_intra(g.view(l), l * g.patch_size, g.view(m), m * g.patch_size));
        }
    }
    EdgeList all;
    for (const auto& e : per_patch) all.append(e);
    all.canonicalize();
    return all;
}

TemporalCorrespondence temporal_correspondence(const PatchGeometry& cur, const PatchGeometry& prev,
                                               const std::vector<PatchMatch>& matches, Exec exec) {
    TemporalCorrespondence corr;
    corr.patch_size = cur.patch_size;
    corr.prev_row.assign(cur.rel.size(), kNoMatch);
    STG_OMP_FOR_IF(is_parallel(exec))
    for (std::size_t l = 0; l < matches.size(); ++l) {
        if (!matches[l].corresponding_temporal) continue;
        const std::size_t c = *matches[l].corresponding_temporal;
        const auto local = connect_inter(cur.view(l), prev.view(c));
        for (std::size_t i = 0; i < local.size(); ++i) corr.prev_row[l * cur.patch_size + i] = c * prev.patch_size + local[i];
    }
    return corr;
}

}  // namespace

nlohmann::json to_json(const FrameReport& report) {
    nlohmann::json j;
    j["points"] = report.points;
    j["patches"] = report.patches;
    j["mode"] = to_string(report.mode);
    j["lambda1"] = report.lambda1;
    j["lambda2"] = report.lambda2;
    j["converged"] = report.converged;
    j["trace_rs"] = report.rs.trace();
    j["trace_rt"] = report.rt.trace();
    j["rs"] = matrix_json(report.rs);
    j["rt"] = matrix_json(report.rt);
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& it : report.iterations) {
        nlohmann::json o;
        o["objective_before"] = it.objective_before;
        o["objective"] = it.objective;
        o["spatial_edges"] = it.spatial_edges;
        o["temporal_pairs"] = it.temporal_pairs;
        o["feature_scale"] = it.feature_scale;
        o["pg_iters_spatial"] = it.pg_iters_spatial;
        o["pg_iters_temporal"] = it.pg_iters_temporal;
        o["trace_rs"] = it.trace_rs;
        o["trace_rt"] = it.trace_rt;
        o["cg_residual"] = it.cg_residual;
        o["cg_iterations"] = it.cg_iterations;
        if (!it.pg_trace_spatial.empty()) o["pg_objective_spatial"] = it.pg_trace_spatial;
        if (!it.pg_trace_temporal.empty()) o["pg_objective_temporal"] = it.pg_trace_temporal;
        iters.push_back(std::move(o));
    }
    j["iterations"] = std::move(iters);
    return j;
}

double evaluate_objective(std::span<const Vec3> coords, std::span<const Vec3> noisy, const PatchSet& patches,
                          const SparseLaplacian& laplacian, const Eigen::VectorXd& temporal_diag,
                          std::span<const Vec3> prev_stacked, double lambda1, double lambda2) {
    if (coords.size() != noisy.size()) throw std::invalid_argument("objective: point counts differ");
    const std::size_t rows = patches.rows();
    double fidelity = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) fidelity += (coords[i] - noisy[i]).squaredNorm();

    const std::vector<Vec3> P = stack_patches(patches, coords);
    double temporal = 0.0;
    if (lambda1 > 0.0 && temporal_diag.size() != 0) {
        if (static_cast<std::size_t>(temporal_diag.size()) != rows) throw std::invalid_argument("objective: W size mismatch");
        for (std::size_t row = 0; row < rows; ++row) {
            const double w = temporal_diag[static_cast<Eigen::Index>(row)];
            if (w == 0.0) continue;
            const Vec3 prev = prev_stacked.empty() ? Vec3::Zero() : prev_stacked[row];
            temporal += w * w * (P[row] - prev).squaredNorm();
        }
    }
    double spatial = 0.0;
    if (lambda2 > 0.0) {
        if (laplacian.size() != rows) throw std::invalid_argument("objective: Laplacian size mismatch");
        Eigen::VectorXd z(static_cast<Eigen::Index>(rows));
        for (int c = 0; c < 3; ++c) {
            for (std::size_t row = 0; row < rows; ++row) z[static_cast<Eigen::Index>(row)] = P[row][c];
            spatial += laplacian.quadratic_form(z);
        }
    }
    return fidelity + lambda1 * temporal + lambda2 * spatial;
}

FrameResult denoise_frame(const PointCloud& noisy, const PointCloud* previous, const DenoiseConfig& cfg) {
    cfg.validate();
    noisy.validate();
    const std::size_t n = noisy.size();
    if (n < cfg.k + 1 || n <= cfg.k_n) {
        throw std::invalid_argument("frame has " + std::to_string(n) + " points; need more than k = " +
                                    std::to_string(cfg.k) + " and k_n = " + std::to_string(cfg.k_n));
    }

    const bool temporal = previous != nullptr && cfg.mode != Mode::baseline1;
    const bool learn = cfg.mode != Mode::baseline2;
    const double lambda1 = temporal ? cfg.lambda1 : 0.0;
    const double lambda2 = cfg.lambda2;

    FrameGraphInputs prev;
    if (temporal) {
        PointCloud prev_cloud;
        prev_cloud.coords = previous->coords;
        if (prev_cloud.size() < cfg.k + 1 || prev_cloud.size() <= cfg.k_n) {
            throw std::invalid_argument("previous frame is too small for the patch configuration");
        }
        prev = prepare(prev_cloud, cfg);
    }

    FrameResult result;
    FrameReport& report = result.report;
    report.points = n;
    report.mode = cfg.mode;
    report.lambda1 = lambda1;
    report.lambda2 = lambda2;

    const PgConfig pg = cfg.pg();
    std::vector<Vec3> U = noisy.coords;
    Mat4 rs = Mat4::Identity(), rt = Mat4::Identity();
    double last_objective = 0.0;

    for (int it = 0; it < cfg.outer_max_iters; ++it) {
        PointCloud current;
        current.coords = U;
        const FrameGraphInputs cur = prepare(current, cfg);
        const std::size_t rows = cur.patches.rows();
        report.patches = cur.patches.patch_count();
        const auto matches = match_patches(cur.geometry, temporal ? &prev.geometry : nullptr, cfg.r, cfg.h, cfg.exec);

        OuterIteration rec;
        rec.feature_scale = cur.scale;

        // Spatial graph and metric.
        const EdgeList edges = spatial_edges(cur.geometry, matches, cfg.exec);
        const NodeFeatures cur_nodes{cur.geometry.rel, cur.geometry.row_normals};
        const FeaturePairSet spatial_features = compute_feature_diffs(edges.edges, cur_nodes, cur_nodes, cur.scale, cfg.exec);
        if (learn) {
            const PgResult fit = learn_metric(spatial_features, pg, rs, cfg.exec);
            rs = fit.metric.R;
            rec.pg_iters_spatial = fit.iterations;
            if (cfg.keep_pg_trace) rec.pg_trace_spatial = fit.objective;
        }
        const auto spatial_w = edge_weights(rs, spatial_features, cfg.exec);
        const SparseLaplacian L = assemble_laplacian(rows, edges, spatial_w);
        rec.spatial_edges = edges.size();

        // Temporal correspondences and metric.
        Eigen::VectorXd W;
        std::vector<Vec3> prev_stacked;
        if (temporal) {
            const TemporalCorrespondence corr = temporal_correspondence(cur.geometry, prev.geometry, matches, cfg.exec);
            const auto pairs = corr.pairs();
            const NodeFeatures prev_nodes{prev.geometry.rel, prev.geometry.row_normals};
            const FeaturePairSet temporal_features = compute_feature_diffs(pairs, cur_nodes, prev_nodes, cur.scale, cfg.exec);
            if (learn) {
                const PgResult fit = learn_metric(temporal_features, pg, rt, cfg.exec);
                rt = fit.metric.R;
                rec.pg_iters_temporal = fit.iterations;
                if (cfg.keep_pg_trace) rec.pg_trace_temporal = fit.objective;
            }
            W = assemble_temporal_weights(corr, edge_weights(rt, temporal_features, cfg.exec));
            prev_stacked.assign(rows, Vec3::Zero());
            for (const Edge& e : pairs) prev_stacked[e.a] = prev.geometry.rel[e.b];
            rec.temporal_pairs = pairs.size();
        }
        rec.trace_rs = rs.trace();
        rec.trace_rt = rt.trace();

        rec.objective_before = evaluate_objective(U, noisy.coords, cur.patches, L, W, prev_stacked, lambda1, lambda2);
        const FrameSystem sys = assemble_system(noisy.coords, cur.patches, L, W, prev_stacked, lambda1, lambda2);
        FrameSolution sol = solve_frame(sys, cfg.cg_tol, cfg.cg_max_iters, cfg.exec);
        U = std::move(sol.coords);
        rec.objective = evaluate_objective(U, noisy.coords, cur.patches, L, W, prev_stacked, lambda1, lambda2);
        rec.cg_residual = *std::max_element(sol.residual.begin(), sol.residual.end());
        rec.cg_iterations = *std::max_element(sol.iterations.begin(), sol.iterations.end());

        if (cfg.keep_graph) {
            GraphDump dump;
            for (std::size_t e = 0; e < edges.size(); ++e) {
                dump.i.push_back(cur.patches.members[edges.edges[e].a]);
                dump.j.push_back(cur.patches.members[edges.edges[e].b]);
                dump.weight.push_back(spatial_w[e]);
            }
            result.graph = std::move(dump);
        }

        const double reference = it == 0 ? rec.objective_before : last_objective;
        last_objective = rec.objective;
        const bool done = std::abs(rec.objective - reference) <= cfg.outer_rel_tol * std::max(1.0, reference);
        report.iterations.push_back(std::move(rec));
        if (done) {
            report.converged = true;
            break;
        }
    }

    report.rs = rs;
    report.rt = rt;
    result.cloud.coords = std::move(U);
    result.cloud.attributes = noisy.attributes;
    return result;
}

SequenceResult denoise_sequence(const Sequence& noisy, const DenoiseConfig& cfg) {
    if (noisy.frames.empty()) throw std::invalid_argument("cannot denoise an empty sequence");
    SequenceResult out;
    for (std::size_t t = 0; t < noisy.size(); ++t) {
        const PointCloud* prev = t == 0 ? nullptr : &out.denoised.frames[t - 1];
        FrameResult fr = denoise_frame(noisy.frames[t], prev, cfg);
        out.denoised.frames.push_back(std::move(fr.cloud));
        out.reports.push_back(std::move(fr.report));
        out.graphs.push_back(std::move(fr.graph));
    }
    return out;
}

}  // namespace stg
