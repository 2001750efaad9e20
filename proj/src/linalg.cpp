#include "trimstokes/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cmath>

namespace trimstokes {

Factorization::Factorization(const SparseMatrix& A)
    : n_(A.rows()), lu_(std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>())
{
    if (A.rows() != A.cols()) {
        throw InvalidArgument("factorization needs a square matrix");
    }
    lu_->analyzePattern(A);
    lu_->factorize(A);
    if (lu_->info() != Eigen::Success) {
        throw SolverFault("sparse LU failed: " + lu_->lastErrorMessage());
    }
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const
{
    Eigen::VectorXd x = lu_->solve(b);
    if (lu_->info() != Eigen::Success) {
        throw SolverFault("sparse LU solve failed");
    }
    return x;
}

SolveReport solve_saddle(const SaddleSystem& sys)
{
    SparseMatrix K = sys.K;
    Eigen::VectorXd b = sys.rhs;
    const Eigen::VectorXd s = jacobi_scale(K, b);
    const Factorization lu(K);
    const Eigen::VectorXd y = lu.solve(b);
    SolveReport r;
    if (!y.allFinite()) {
        throw SolverFault("saddle solve produced non-finite values");
    }
    r.residual = (K * y - b).norm() / (K.norm() * y.norm() + b.norm() + 1e-300);
    r.x = s.cwiseProduct(y);
    return r;
}

Eigen::VectorXd dense_gen_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M)
{
    const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw SolverFault("dense generalized eigenvalue solver failed (mass matrix not SPD?)");
    }
    return es.eigenvalues();
}

namespace {

// Power iteration on M^-1 (A + shift M); returns the Rayleigh quotient of A.
EigenResult power(const SparseMatrix& A, const SparseMatrix& M, const Eigen::SimplicialLDLT<SparseMatrix>& chol,
                  double shift, double tol, int max_iter)
{
    const Index n = A.rows();
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    for (Index i = 0; i < n; ++i) {
        x(i) += 0.1 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    }
    x /= std::sqrt(x.dot(M * x));
    EigenResult r;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::VectorXd Ax = A * x;
        const double lambda = x.dot(Ax);
        Eigen::VectorXd y = chol.solve(Ax + shift * (M * x));
        const double ny = std::sqrt(y.dot(M * y));
        if (!(ny > 0.0) || !std::isfinite(ny)) {
            r.value = lambda;
            r.iterations = it;
            return r;
        }
        // Residual of the pencil in the M-norm; the eigenvalue error is
        // bounded by its square over the spectral gap.
        const Eigen::VectorXd res = y - (lambda + shift) * x;
        const double rn = std::sqrt(std::max(res.dot(M * res), 0.0));
        x = y / ny;
        r.value = lambda;
        r.iterations = it;
        if (it > 1 && std::abs(lambda - prev) <= tol * std::abs(lambda) && rn <= std::sqrt(tol) * std::abs(lambda)) {
            r.converged = true;
            break;
        }
        prev = lambda;
    }
    r.value = x.dot(A * x);
    return r;
}

} // namespace

EigenResult gen_eig_max(const SparseMatrix& A, const SparseMatrix& M, double tol, int max_iter)
{
    Eigen::SimplicialLDLT<SparseMatrix> chol(M);
    if (chol.info() != Eigen::Success) {
        throw SolverFault("mass matrix of the eigenproblem is not positive definite");
    }
    EigenResult r = power(A, M, chol, 0.0, tol, max_iter);
    if (r.value < 0.0 || !r.converged) {
        // Shift so that the largest eigenvalue dominates.
        const double shift = std::abs(r.value) * 1.5 + 1e-300;
        r = power(A, M, chol, shift, tol, max_iter);
    }
    if (!r.converged) {
        if (A.rows() <= 600) {
            const Eigen::VectorXd ev = dense_gen_eigenvalues(Eigen::MatrixXd(A), Eigen::MatrixXd(M));
            r.value = ev(ev.size() - 1);
            r.converged = true;
            return r;
        }
        throw SolverFault("power iteration did not converge after " + std::to_string(max_iter) +
                          " iterations (last estimate " + std::to_string(r.value) + ")");
    }
    return r;
}

double infsup_constant(const SparseMatrix& B, const SparseMatrix& Nv, const SparseMatrix& Mp,
                       const Eigen::VectorXd* exclude)
{
    const Index np = B.rows();
    if (Mp.rows() != np || Nv.rows() != B.cols()) {
        throw InvalidArgument("inf-sup: inconsistent matrix sizes");
    }
    Eigen::SimplicialLDLT<SparseMatrix> chol(Nv);
    if (chol.info() != Eigen::Success) {
        throw SolverFault("velocity norm matrix is not positive definite");
    }
    const Eigen::MatrixXd Bt = Eigen::MatrixXd(B.transpose());
    const Eigen::MatrixXd X = chol.solve(Bt);
    Eigen::MatrixXd S = B * X;
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::MatrixXd M = Eigen::MatrixXd(Mp);
    const Eigen::VectorXd d = M.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    S = d.asDiagonal() * S * d.asDiagonal();
    M = d.asDiagonal() * M * d.asDiagonal();
    if (exclude != nullptr) {
        const Eigen::VectorXd c = d.cwiseProduct(*exclude);
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(np, np);
        const Eigen::MatrixXd Z = Q.rightCols(np - 1);
        S = Z.transpose() * S * Z;
        M = Z.transpose() * M * Z;
    }
    const Eigen::VectorXd ev = dense_gen_eigenvalues(S, M);
    return std::sqrt(std::max(ev(0), 0.0));
}

} // namespace trimstokes
