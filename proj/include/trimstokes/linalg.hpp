#pragma once

// Sparse direct solves and the generalized eigenvalue computations behind
// the inf-sup and continuity constants.

#include "trimstokes/assembly.hpp"

#include <Eigen/SparseLU>

#include <memory>

namespace trimstokes {

/// Sparse LU with COLAMD ordering. Throws SolverFault on a singular matrix.
class Factorization {
public:
    explicit Factorization(const SparseMatrix& A);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Index size() const { return n_; }

private:
    Index n_ = 0;
    std::shared_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

struct SolveReport {
    Eigen::VectorXd x;
    double residual = 0.0;  ///< ||K x - b|| / (||K|| ||x|| + ||b||), on the scaled system
};

/// Jacobi-scale, factor and solve the saddle system; x is descaled.
SolveReport solve_saddle(const SaddleSystem& sys);

struct EigenResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest lambda of A x = lambda M x (A symmetric, M SPD) by power
/// iteration on M^-1 A, shifted when the dominant eigenvalue is negative.
/// Stops when the Rayleigh quotient changes by at most tol (relative) and the
/// M-norm residual is at most sqrt(tol)|lambda|; at most max_iter iterations
/// per sweep.
EigenResult gen_eig_max(const SparseMatrix& A, const SparseMatrix& M, double tol = 1e-8, int max_iter = 5000);

/// Dense reference: all eigenvalues of A x = lambda M x in increasing order.
Eigen::VectorXd dense_gen_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M);

/// beta = sqrt(lambda_min) of B Nv^-1 B^T q = lambda Mp q, optionally on the
/// complement of `exclude` (a pressure functional, e.g. the integrals of the
/// pressure basis for zero-mean pressures). Negative round-off clamps to 0.
double infsup_constant(const SparseMatrix& B, const SparseMatrix& Nv, const SparseMatrix& Mp,
                       const Eigen::VectorXd* exclude = nullptr);

} // namespace trimstokes
