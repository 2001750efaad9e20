#pragma once

// Manufactured solutions, the solve pipeline, error norms and the
// experiment drivers (convergence, inf-sup tables, continuity sweep,
// cylinder flow).

#include "trimstokes/linalg.hpp"

#include <optional>
#include <string>

namespace trimstokes {

using GradientField = std::function<Mat2(const Vec2&)>;

/// Exact (u, p) with the data it induces for viscosity mu.
/// grad_u(x)(a, b) = d u_a / d x_b.
struct ManufacturedCase {
    std::string name;
    double mu = 1.0;
    VectorField u;
    GradientField grad_u;
    ScalarField p;
    VectorField f;
    ScalarField g;

    /// f, g, u_D = u and sigma_N = (mu Du - p I) n.
    ProblemData data() const;
};

/// u = (x y^3, x^4 - y^4/4), p = x^3 cos x + y^2 sin x - p_mean.
ManufacturedCase pentagon_case(double mu, double p_mean);
/// u = (2 y^3 sin x, x^3 sin x - y^4 cos x / 2 - 3 x^2 cos x), p = x^3 y^2 / 2 + y^3 / 2.
ManufacturedCase circle_case(double mu);
/// u = (y, x), p = 0.
ManufacturedCase patch_case(double mu);

/// Unit square minus the triangle (0, 0.25+eps), (0.75-eps, 1), (0, 1).
/// `fitted` tags the four untrimmed faces.
TrimmedDomain pentagon_domain(double eps, BCTag fitted = BCTag::dirichlet_strong);
/// Unit square minus y > 0.75 + eps.
TrimmedDomain rectangle_domain(double eps, BCTag fitted = BCTag::dirichlet_strong);
/// (0,2)^2 minus the disk B(0, 0.52); Neumann on x=0 and y=0, strong Dirichlet on x=2 and y=2.
TrimmedDomain circle_square_domain();
/// Channel (0,2.2)x(0,0.41) minus B((0.2,0.2), 0.05); strong inflow/walls, Neumann outflow.
TrimmedDomain cylinder_domain();

/// Parabolic inflow 4 U_m y (H - y) / H^2 on x = 0 (U_m = 0.3), zero elsewhere.
VectorField cylinder_velocity_data();

/// Integral of s over the trimmed domain on an n x n mesh.
double integrate(const TrimmedDomain& domain, Index n, int order, const ScalarField& s);

struct SolverOptions {
    ElementSpec element;
    FormParams form;
    double theta = 1.0;
    MeshSize mesh_size = MeshSize::edge;
    int quad_order = 0;        ///< 0 selects k + 3
    int error_quad_order = 0;  ///< 0 selects k + 4
};

/// Mesh, spaces and projectors of one discretization.
struct Discretization {
    TrimmedMesh mesh;
    StokesSpaces spaces;
    Stabilization stab;
    bool stabilized = true;
};

Discretization discretize(const TrimmedDomain& domain, Index nx, Index ny, const SolverOptions& opt,
                          const VectorField& u_D);

/// True when constants lie in the kernel of the velocity-row coupling
/// b_1(v, 1) = 0, i.e. when there is no Neumann boundary (any m).
bool needs_mean_border(const TrimmedMesh& mesh);
bool has_neumann(const TrimmedMesh& mesh);

struct Solution {
    Eigen::VectorXd u;  ///< all velocity DOFs (constrained ones filled in)
    Eigen::VectorXd p;  ///< all pressure DOFs (zero when pruned or inactive)
    double residual = 0.0;
    bool mean_border = false;
};

Solution solve(const Discretization& disc, const FormParams& form, const ProblemData& data);

struct ErrorNorms {
    double e1h = 0.0;   ///< ||u - u_h||_{1,h}
    double e0h = 0.0;   ///< ||p - p_h||_{0,h}
    double ediv = 0.0;  ///< ||div u_h - g||
};

/// Errors on `mesh` (same grid and classification as the discretization,
/// possibly a finer quadrature). With `subtract_mean`, the mean of p - p_h
/// is removed before the pressure error is taken.
ErrorNorms error_norms(const Discretization& disc, const TrimmedMesh& mesh, const Solution& sol,
                       const ManufacturedCase& mc, bool subtract_mean);

struct CaseRun {
    Index nx = 0;
    Index ny = 0;
    Index velocity_unknowns = 0;
    Index pressure_unknowns = 0;
    Index bad_elements = 0;
    Index active_elements = 0;
    double residual = 0.0;
    bool mean_border = false;
    ErrorNorms errors;
};

/// Errors and counts of a solved discretization; the error quadrature uses
/// the same grid with opt.error_quad_order.
CaseRun measure_case(const Discretization& disc, const Solution& sol, const SolverOptions& opt,
                     const ManufacturedCase& mc);

/// Discretize, solve and measure one manufactured case.
CaseRun run_case(const TrimmedDomain& domain, Index nx, Index ny, const SolverOptions& opt,
                 const ManufacturedCase& mc);

struct ConvergenceRow {
    double h = 0.0;
    CaseRun run;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double slope_e1h = 0.0;
    double slope_e0h = 0.0;
    double slope_combined = 0.0;  ///< of e1h + e0h
    double slope_div = 0.0;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Slopes over the last three rows of t.
void fit_slopes(ConvergenceTable& t);

/// Levels l give 2^l x 2^l meshes; slopes over the last three levels.
ConvergenceTable convergence_study(const TrimmedDomain& domain, const ManufacturedCase& mc, const SolverOptions& opt,
                                   const std::vector<int>& levels);

struct InfSupRow {
    double h = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    Index pressure_unknowns = 0;
    Index bad_elements = 0;
    std::string error;  ///< non-empty when the level failed
};

/// beta_0 and beta_1 per level (m = 0 and m = 1 forms, same norms).
std::vector<InfSupRow> infsup_table(const TrimmedDomain& domain, const SolverOptions& opt,
                                    const std::vector<int>& levels);

struct ContinuityRow {
    double eps = 0.0;
    double h = 0.0;
    double lambda_max = 0.0;
};

/// lambda_max of a_h u = lambda (u, .)_{1,h} on the rectangle for each eps,
/// Dirichlet conditions weak on every face.
std::vector<ContinuityRow> continuity_sweep(const SolverOptions& opt, const std::vector<double>& eps_list,
                                            const std::vector<int>& levels);

struct CylinderResult {
    CaseRun run;
    double max_speed = 0.0;
    double min_speed = 0.0;
    double max_pressure = 0.0;
    double min_pressure = 0.0;
    double inflow = 0.0;     ///< |int_in u.n|
    double imbalance = 0.0;  ///< |int_in u.n + int_out u.n|
    /// Raster samples (x, y, |u|, p) inside the fluid.
    std::vector<std::array<double, 4>> raster;
};

CylinderResult cylinder_demo(const SolverOptions& opt, Index nx, Index ny, Index raster_nx, Index raster_ny);

/// Velocity and pressure of a solution at a physical point of the affine patch.
std::optional<std::pair<Vec2, double>> sample(const Discretization& disc, const Solution& sol, const Vec2& x);

} // namespace trimstokes
