#pragma once

#include "stg/graph.hpp"
#include "stg/metric_learning.hpp"
#include "stg/parallel.hpp"
#include "stg/patching.hpp"
#include "stg/point_cloud.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stg {

/// full: learned spatial and temporal metrics.
/// baseline1: temporal term disabled (lambda1 = 0).
/// baseline2: metric learning disabled (R_s = R_t = I).
enum class Mode { full, baseline1, baseline2 };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct DenoiseConfig {
    double lambda1 = 0.003;  // temporal consistency weight
    double lambda2 = 0.1;    // spatial smoothness weight
    double bound = 10.0;     // trace bound C on R
    double pg_step = 1e-4;
    int pg_max_iters = 200;
    double pg_rel_tol = 1e-6;
    std::size_t k = 29;  // neighbors per patch (patches have k+1 points)
    double patch_fraction = 0.2;
    std::size_t r = 8;    // similar patches per target
    std::size_t h = 16;   // search window, in patch centers
    std::size_t k_n = 15; // neighbors for normal estimation
    // Position features are divided by feature_scale times the mean
    // nearest-neighbour spacing of the current iterate; 0 keeps raw coordinates.
    double feature_scale = 2.0;
    int outer_max_iters = 10;
    double outer_rel_tol = 1e-4;
    double cg_tol = 1e-8;
    int cg_max_iters = 0;  // 0: 10 n
    std::uint64_t seed = 1;
    Mode mode = Mode::full;
    Exec exec = Exec::parallel;
    bool keep_graph = false;     // return the final graph for dumping
    bool keep_pg_trace = false;  // record per-iteration PG objectives

    void validate() const;
    std::size_t patch_count(std::size_t n) const;
    PgConfig pg() const { return {pg_step, pg_max_iters, pg_rel_tol, bound}; }
};

struct OuterIteration {
    double objective_before = 0.0;  // J at the previous iterate, this iteration's graph
    double objective = 0.0;         // J at the new iterate, same graph
    std::size_t spatial_edges = 0;
    std::size_t temporal_pairs = 0;
    double feature_scale = 1.0;  // divisor applied to position features
    int pg_iters_spatial = 0;
    int pg_iters_temporal = 0;
    double trace_rs = 0.0;
    double trace_rt = 0.0;
    double cg_residual = 0.0;  // worst of the three columns
    int cg_iterations = 0;     // most of the three columns
    std::vector<double> pg_trace_spatial;
    std::vector<double> pg_trace_temporal;
};

struct FrameReport {
    std::size_t points = 0;
    std::size_t patches = 0;
    Mode mode = Mode::full;
    double lambda1 = 0.0;  // effective value
    double lambda2 = 0.0;
    bool converged = false;
    std::vector<OuterIteration> iterations;
    Mat4 rs = Mat4::Identity();
    Mat4 rt = Mat4::Identity();
};

nlohmann::json to_json(const FrameReport& report);

/// Final spatial graph of a frame in point indices (edges of the patch
/// graph mapped through patch membership).
struct GraphDump {
    std::vector<std::size_t> i, j;
    std::vector<double> weight;
};

struct FrameResult {
    PointCloud cloud;
    FrameReport report;
    std::optional<GraphDump> graph;
};

/// Alternating minimization for one frame. `previous` is the reconstructed
/// previous frame; without it the temporal term is off.
FrameResult denoise_frame(const PointCloud& noisy, const PointCloud* previous, const DenoiseConfig& cfg);

struct SequenceResult {
    Sequence denoised;
    std::vector<FrameReport> reports;
    std::vector<std::optional<GraphDump>> graphs;
};

/// Frames in order, each using the reconstruction of its predecessor.
SequenceResult denoise_sequence(const Sequence& noisy, const DenoiseConfig& cfg);

/// J = |U - U_noisy|^2 + l1 |W (S U - C - P_prev)|^2 + l2 tr((S U - C)^T L (S U - C)).
/// `temporal_diag` / `prev_stacked` may be empty (treated as zero).
double evaluate_objective(std::span<const Vec3> coords, std::span<const Vec3> noisy, const PatchSet& patches,
                          const SparseLaplacian& laplacian, const Eigen::VectorXd& temporal_diag,
                          std::span<const Vec3> prev_stacked, double lambda1, double lambda2);

}  // namespace stg
