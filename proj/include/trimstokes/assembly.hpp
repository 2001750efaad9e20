#pragma once

// Nitsche forms of the (stabilized) Stokes problem, the mesh-dependent norm
// matrices, strong-BC elimination and Jacobi scaling of the saddle system.
//
//   a(w,v) = (mu Dw, Dv) - <mu D R(w) n, v> - <mu w, D R(v) n> + gamma <h^-1 w, v>
//   b_m(v,q) = -(q, div v) + m <q, v.n>
//
// Boundary terms run over the weak Dirichlet arcs; R is the identity on good
// elements and R^v on bad ones. On strong RT/N faces only the tangential
// parts enter the face integrals.

#include "trimstokes/stabilization.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <string>

namespace trimstokes {

using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(const Vec2&)>;
/// Neumann datum sigma_N(x, n).
using TractionField = std::function<Vec2(const Vec2&, const Vec2&)>;

struct FormParams {
    double mu = 1.0;
    double gamma = 1.0;
    int m = 0;
    bool stabilized = true;
};

struct ProblemData {
    VectorField f;
    ScalarField g;
    VectorField u_D;
    TractionField sigma_N;
};

/// Blocks on the unknowns (free velocity, kept pressure). Pressure rows.
struct AssembledSystem {
    SparseMatrix A;
    SparseMatrix B1;
    SparseMatrix Bm;
    Eigen::VectorXd F;
    Eigen::VectorXd G;
    /// Integral of each pressure unknown over Omega.
    Eigen::VectorXd pressure_mean;
    FormParams params;
};

struct NormMatrices {
    SparseMatrix Nv;  ///< ||.||_{1,h} on free velocity unknowns
    SparseMatrix Mp;  ///< ||.||_{0,h} on pressure unknowns
};

/// Throws InvalidArgument for gamma <= 0 or m outside {0,1}. `stab` is
/// ignored when params.stabilized is false.
AssembledSystem assemble(const TrimmedMesh& mesh, const StokesSpaces& spaces, const Stabilization& stab,
                         const FormParams& params, const ProblemData& data);

NormMatrices assemble_norm_matrices(const TrimmedMesh& mesh, const StokesSpaces& spaces, const Stabilization& stab,
                                    double mu, bool stabilized);

struct SaddleSystem {
    SparseMatrix K;
    Eigen::VectorXd rhs;
    Index nu = 0;
    Index np = 0;
    bool mean_border = false;
};

/// [[A, B1^T], [Bm, 0]] with an optional zero-mean border row/column.
SaddleSystem saddle_system(const AssembledSystem& sys, bool mean_border);

/// Symmetric Jacobi scaling in place: K <- D^-1/2 K D^-1/2, rhs <- D^-1/2 rhs.
/// Rows with a zero diagonal keep D = 1. Returns D^-1/2 (x = s .* y).
Eigen::VectorXd jacobi_scale(SparseMatrix& K, Eigen::VectorXd& rhs);

/// MatrixMarket coordinate export.
void write_matrix_market(const SparseMatrix& M, const std::string& path);

} // namespace trimstokes
