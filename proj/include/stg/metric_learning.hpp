#pragma once

#include "stg/graph.hpp"
#include "stg/parallel.hpp"
#include "stg/types.hpp"

#include <optional>
#include <vector>

namespace stg {

/// Linear feature transform R; the learned Mahalanobis metric is R^T R.
/// Feasible when trace(R) <= bound and every diagonal entry is >= 0.
struct MetricMatrix {
    Mat4 R = Mat4::Identity();
    double bound = 10.0;

    bool feasible(double slack = 1e-9) const;
    Mat4 implied_metric() const { return R.transpose() * R; }
};

struct PgConfig {
    double step = 1e-4;
    int max_iters = 200;
    double rel_tol = 1e-6;
    double bound = 10.0;  // C
};

/// F(R) = sum exp(-|R f|^2) d over all pairs.
double glr_objective(const Mat4& R, const FeaturePairSet& pairs, Exec exec = Exec::parallel);

/// dF/dR = -2 sum R f f^T exp(-|R f|^2) d.
Mat4 glr_gradient(const Mat4& R, const FeaturePairSet& pairs, Exec exec = Exec::parallel);

/// Projection onto {trace(R) <= C, diag(R) >= 0}. Negative diagonal entries
/// are clamped to zero first; if the trace still exceeds C the diagonal is
/// scaled by C / trace. Off-diagonal entries are untouched.
MetricMatrix project_feasible(const Mat4& V, double bound);

struct PgResult {
    MetricMatrix metric;
    std::vector<double> objective;  // F at R0 and at every accepted iterate
    int iterations = 0;
    bool converged = false;
};

/// Projected gradient descent with a fixed step from R0 (identity by default).
/// Stops when |F_next - F| <= rel_tol * max(1, F). Throws StepSizeError if an
/// iterate raises F, std::invalid_argument for a non-positive step.
PgResult learn_metric(const FeaturePairSet& pairs, const PgConfig& cfg, std::optional<Mat4> R0 = std::nullopt,
                      Exec exec = Exec::parallel);

}  // namespace stg
