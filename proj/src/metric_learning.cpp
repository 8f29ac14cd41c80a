#include "stg/metric_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stg {
namespace {

std::size_t chunk_count(std::size_t n) { return (n + kReduceChunk - 1) / kReduceChunk; }

// sum_p exp(-|R f_p|^2) d_p * f_p f_p^T, accumulated per fixed chunk and then
// combined in chunk order so serial and parallel runs agree bit for bit.
Mat4 weighted_scatter(const Mat4& R, const FeaturePairSet& pairs, Exec exec) {
    const std::size_t n = pairs.size();
    const std::size_t chunks = chunk_count(n);
    std::vector<Mat4> partial(chunks, Mat4::Zero());
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t c = 0; c < chunks; ++c) {
        Mat4 acc = Mat4::Zero();
        const std::size_t hi = std::min(n, (c + 1) * kReduceChunk);
        for (std::size_t p = c * kReduceChunk; p < hi; ++p) {
            const Vec4& f = pairs.diff[p];
            const double s = std::exp(-(R * f).squaredNorm()) * pairs.d[p];
            acc.noalias() += s * (f * f.transpose());
        }
        partial[c] = acc;
    }
    Mat4 total = Mat4::Zero();
    for (const auto& m : partial) total += m;
    return total;
}

}  // namespace

bool MetricMatrix::feasible(double slack) const {
    return R.trace() <= bound + slack && (R.diagonal().array() >= 0.0).all();
}

double glr_objective(const Mat4& R, const FeaturePairSet& pairs, Exec exec) {
    const std::size_t n = pairs.size();
    const std::size_t chunks = chunk_count(n);
    std::vector<double> partial(chunks, 0.0);
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t c = 0; c < chunks; ++c) {
        double acc = 0.0;
        const std::size_t hi = std::min(n, (c + 1) * kReduceChunk);
        for (std::size_t p = c * kReduceChunk; p < hi; ++p) {
            acc += std::exp(-(R * pairs.diff[p]).squaredNorm()) * pairs.d[p];
        }
        partial[c] = acc;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

Mat4 glr_gradient(const Mat4& R, const FeaturePairSet& pairs, Exec exec) {
    return -2.0 * R * weighted_scatter(R, pairs, exec);
}

MetricMatrix project_feasible(const Mat4& V, double bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("trace bound must be positive");
    MetricMatrix out{V, bound};
    if (V.trace() <= bound && (V.diagonal().array() >= 0.0).all()) return out;

    Mat4& G = out.R;
    for (int i = 0; i < kFeatureDim; ++i) G(i, i) = std::max(G(i, i), 0.0);
    double tr = G.trace();
    // Shrink the diagonal by alpha = 1 - C / tr(G), i.e. scale it by C / tr(G).
    // A final ulp-level shrink guards against rounding leaving tr just above C.
    while (tr > bound) {
        const double scale = tr > bound * (1.0 + 1e-12) ? bound / tr : 1.0 - std::numeric_limits<double>::epsilon();
        for (int i = 0; i < kFeatureDim; ++i) G(i, i) *= scale;
        tr = G.trace();
    }
    return out;
}

PgResult learn_metric(const FeaturePairSet& pairs, const PgConfig& cfg, std::optional<Mat4> R0, Exec exec) {
    if (!(cfg.step > 0.0)) throw std::invalid_argument("proximal gradient step must be positive");
    PgResult res;
    res.metric = project_feasible(R0.value_or(Mat4::Identity()), cfg.bound);
    if (pairs.empty()) {
        res.converged = true;
        return res;
    }

    Mat4 R = res.metric.R;
    double F = glr_objective(R, pairs, exec);
    res.objective.push_back(F);
    for (int it = 0; it < cfg.max_iters; ++it) {
        const MetricMatrix next = project_feasible(R - cfg.step * glr_gradient(R, pairs, exec), cfg.bound);
        const double Fn = glr_objective(next.R, pairs, exec);
        // Absolute slack plus a few ulps of F for summation rounding.
        const double slack = 1e-12 + 16.0 * std::numeric_limits<double>::epsilon() * std::abs(F);
        if (Fn > F + slack) {
            throw StepSizeError("proximal gradient step " + std::to_string(cfg.step) + " increased the objective from " +
                                std::to_string(F) + " to " + std::to_string(Fn) + "; reduce the step size");
        }
        R = next.R;
        res.objective.push_back(Fn);
        res.iterations = it + 1;
        if (std::abs(Fn - F) <= cfg.rel_tol * std::max(1.0, F)) {
            res.converged = true;
            break;
        }
        F = Fn;
    }
    res.metric = {R, cfg.bound};
    return res;
}

}  // namespace stg
