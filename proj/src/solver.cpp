#include "stg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stg {

FrameSystem assemble_system(std::span<const Vec3> noisy, const PatchSet& patches, const SparseLaplacian& laplacian,
                            const Eigen::VectorXd& temporal_diag, std::span<const Vec3> prev_stacked, double lambda1,
                            double lambda2) {
    const std::size_t n = noisy.size();
    const std::size_t rows = patches.rows();
    if (laplacian.size() != rows) throw std::invalid_argument("Laplacian size does not match the stacked patch rows");
    if (temporal_diag.size() != 0 && static_cast<std::size_t>(temporal_diag.size()) != rows) {
        throw std::invalid_argument("temporal weight diagonal does not match the stacked patch rows");
    }
    if (!prev_stacked.empty() && prev_stacked.size() != rows) {
        throw std::invalid_argument("previous-frame patches do not match the stacked patch rows");
    }
    for (std::size_t p : patches.members) {
        if (p >= n) throw std::invalid_argument("patch member index exceeds the point count");
    }
    if (lambda1 < 0.0 || lambda2 < 0.0) throw std::invalid_argument("regularization weights must be non-negative");

    auto center = [&](std::size_t row) -> const Vec3& { return patches.center_coords[patches.patch_of_row(row)]; };

    FrameSystem sys;
    sys.B.resize(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) sys.B.row(static_cast<Eigen::Index>(i)) = noisy[i].transpose();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(n + rows + static_cast<std::size_t>(laplacian.matrix.nonZeros()));
    for (std::size_t i = 0; i < n; ++i) trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), 1.0);

    // lambda1 S^T W^T W S  and  lambda1 S^T W^T W (C + P_prev)
    if (lambda1 > 0.0 && temporal_diag.size() != 0) {
        for (std::size_t row = 0; row < rows; ++row) {
            const double w2 = temporal_diag[static_cast<Eigen::Index>(row)] * temporal_diag[static_cast<Eigen::Index>(row)];
            if (w2 == 0.0) continue;
            const auto p = static_cast<Eigen::Index>(patches.members[row]);
            trips.emplace_back(p, p, lambda1 * w2);
            Vec3 target = center(row);
            if (!prev_stacked.empty()) target += prev_stacked[row];
            sys.B.row(p) += lambda1 * w2 * target.transpose();
        }
    }

    // lambda2 S^T L S  and  lambda2 S^T L C
    if (lambda2 > 0.0) {
        const SparseMatrix& L = laplacian.matrix;
        for (Eigen::Index a = 0; a < L.outerSize(); ++a) {
            const auto pa = static_cast<Eigen::Index>(patches.members[static_cast<std::size_t>(a)]);
            Vec3 lc = Vec3::Zero();
            for (SparseMatrix::InnerIterator it(L, a); it; ++it) {
                const auto b = static_cast<std::size_t>(it.col());
                trips.emplace_back(pa, static_cast<Eigen::Index>(patches.members[b]), lambda2 * it.value());
                lc += it.value() * center(b);
            }
            sys.B.row(pa) += lambda2 * lc.transpose();
        }
    }

    sys.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    sys.A.setFromTriplets(trips.begin(), trips.end());
    sys.A.makeCompressed();
    return sys;
}

void spmv(const SparseMatrix& A, const Eigen::VectorXd& x, Eigen::VectorXd& y, Exec exec) {
    const Eigen::Index n = A.rows();
    y.resize(n);
    const int* outer = A.outerIndexPtr();
    const int* inner = A.innerIndexPtr();
    const double* val = A.valuePtr();
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (Eigen::Index r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
        y[r] = acc;
    }
}

namespace {

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Exec exec) {
    const auto n = static_cast<std::size_t>(a.size());
    const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(chunks, 0.0);
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t c = 0; c < chunks; ++c) {
        double acc = 0.0;
        const std::size_t hi = std::min(n, (c + 1) * kReduceChunk);
        for (std::size_t i = c * kReduceChunk; i < hi; ++i) {
            acc += a[static_cast<Eigen::Index>(i)] * b[static_cast<Eigen::Index>(i)];
        }
        partial[c] = acc;
    }
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

}  // namespace

ColumnSolve conjugate_gradient(const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iters, Exec exec) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || b.size() != n) throw std::invalid_argument("conjugate gradient: dimension mismatch");
    if (!A.isCompressed()) throw std::invalid_argument("conjugate gradient expects a compressed matrix");

    ColumnSolve out;
    out.x = Eigen::VectorXd::Zero(n);
    const double bnorm = std::sqrt(dot(b, b, exec));
    if (bnorm == 0.0) return out;

    Eigen::VectorXd inv_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = A.coeff(i, i);
        if (!(d > 0.0)) throw std::invalid_argument("system matrix has a non-positive diagonal entry");
        inv_diag[i] = 1.0 / d;
    }

    Eigen::VectorXd r = b, z(n), p(n), Ap(n);
    double rnorm = bnorm;
    // Restart from the true residual if the recurrence drifted below tol.
    while (true) {
        z = inv_diag.cwiseProduct(r);
        p = z;
        double rz = dot(r, z, exec);
        while (rnorm > tol * bnorm && out.iterations < max_iters) {
            spmv(A, p, Ap, exec);
            const double alpha = rz / dot(p, Ap, exec);
            out.x += alpha * p;
            r -= alpha * Ap;
            rnorm = std::sqrt(dot(r, r, exec));
            ++out.iterations;
            if (rnorm <= tol * bnorm) break;
            z = inv_diag.cwiseProduct(r);
            const double rz_next = dot(r, z, exec);
            p = z + (rz_next / rz) * p;
            rz = rz_next;
        }
        spmv(A, out.x, Ap, exec);
        r = b - Ap;
        rnorm = std::sqrt(dot(r, r, exec));
        if (rnorm <= tol * bnorm || out.iterations >= max_iters) break;
    }
    out.residual = rnorm / bnorm;
    if (out.residual > tol) {
        throw SolveError("conjugate gradient stopped at relative residual " + std::to_string(out.residual) + " after " +
                             std::to_string(out.iterations) + " iterations",
                         out.residual);
    }
    return out;
}

FrameSolution solve_frame(const FrameSystem& system, double tol, int max_iters, Exec exec) {
    const Eigen::Index n = system.A.rows();
    if (system.B.rows() != n) throw std::invalid_argument("right-hand side does not match the system size");
    if (max_iters <= 0) max_iters = static_cast<int>(std::max<Eigen::Index>(10 * n, 1));
    FrameSolution sol;
    sol.coords.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd b = system.B.col(c);
        const ColumnSolve col = conjugate_gradient(system.A, b, tol, max_iters, exec);
        sol.residual[static_cast<std::size_t>(c)] = col.residual;
        sol.iterations[static_cast<std::size_t>(c)] = col.iterations;
        for (Eigen::Index i = 0; i < n; ++i) sol.coords[static_cast<std::size_t>(i)][c] = col.x[i];
    }
    return sol;
}

}  // namespace stg
