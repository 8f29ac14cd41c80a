#pragma once

#include "stg/graph.hpp"
#include "stg/parallel.hpp"
#include "stg/patching.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace stg {

/// Normal equations of the frame objective for fixed graph and temporal
/// weights:
///   (I + l1 S^T W^2 S + l2 S^T L S) U = U_noisy + l1 S^T W^2 (C + P_prev) + l2 S^T L C
/// S selects patch members into stacked rows and C holds the patch center of
/// every row.
struct FrameSystem {
    SparseMatrix A;
    Eigen::MatrixX3d B;
};

/// `temporal_diag` and `prev_stacked` have one entry per stacked row; either
/// may be empty, meaning zero. Throws std::invalid_argument on size mismatch.
FrameSystem assemble_system(std::span<const Vec3> noisy, const PatchSet& patches, const SparseLaplacian& laplacian,
                            const Eigen::VectorXd& temporal_diag, std::span<const Vec3> prev_stacked, double lambda1,
                            double lambda2);

/// y = A x.
void spmv(const SparseMatrix& A, const Eigen::VectorXd& x, Eigen::VectorXd& y, Exec exec = Exec::parallel);

struct ColumnSolve {
    Eigen::VectorXd x;
    double residual = 0.0;  // |A x - b| / |b|
    int iterations = 0;
};

/// Jacobi-preconditioned conjugate gradient from x = 0. Throws SolveError if
/// the relative residual is still above `tol` after `max_iters` iterations.
ColumnSolve conjugate_gradient(const SparseMatrix& A, const Eigen::VectorXd& b, double tol, int max_iters,
                               Exec exec = Exec::parallel);

struct FrameSolution {
    std::vector<Vec3> coords;
    std::array<double, 3> residual{};
    std::array<int, 3> iterations{};
};

/// Solves the three coordinate columns independently. max_iters <= 0 means 10 n.
FrameSolution solve_frame(const FrameSystem& system, double tol = 1e-8, int max_iters = 0,
                          Exec exec = Exec::parallel);

}  // namespace stg
