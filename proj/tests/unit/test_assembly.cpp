#include "trimstokes/analysis.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace trimstokes;

namespace {

Discretization make(const TrimmedDomain& d, ElementKind kind, int k, Index n, bool stabilized)
{
    SolverOptions o;
    o.element = {kind, k, -1};
    o.form.stabilized = stabilized;
    return discretize(d, n, n, o, nullptr);
}

ProblemData zero_data()
{
    ProblemData pd;
    pd.f = [](const Vec2&) { return Vec2(0, 0); };
    pd.g = [](const Vec2&) { return 0.0; };
    pd.u_D = [](const Vec2&) { return Vec2(0, 0); };
    pd.sigma_N = [](const Vec2&, const Vec2&) { return Vec2(0, 0); };
    return pd;
}

double max_abs(const SparseMatrix& M)
{
    double m = 0.0;
    for (int j = 0; j < M.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
            m = std::max(m, std::abs(it.value()));
        }
    }
    return m;
}

double asym(const SparseMatrix& M)
{
    const SparseMatrix D = M - SparseMatrix(M.transpose());
    return max_abs(D);
}

bool identical(const SparseMatrix& a, const SparseMatrix& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && max_abs(a - b) == 0.0 && a.nonZeros() == b.nonZeros();
}

} // namespace

TEST(Assembly, PatchTestReproducesLinearFlow)
{
    TrimmedDomain d;
    d.faces = {BCTag::dirichlet_strong, BCTag::dirichlet_strong, BCTag::dirichlet_strong, BCTag::dirichlet_strong};
    SolverOptions o;
    o.element = {ElementKind::TH, 1, -1};
    o.form.gamma = 10.0;
    const CaseRun r = run_case(d, 4, 4, o, patch_case(1.0));
    EXPECT_LE(r.errors.e1h, 1e-10);
    EXPECT_LE(r.errors.e0h, 1e-10);
}

TEST(Assembly, SaddleMatrixSymmetricForM1)
{
    for (ElementKind kind : {ElementKind::RT, ElementKind::N, ElementKind::TH}) {
        const Discretization disc = make(pentagon_domain(1e-13), kind, 2, 4, true);
        ASSERT_FALSE(disc.mesh.bad().empty());
        FormParams fp;
        fp.gamma = 20.0;
        fp.m = 1;
        const AssembledSystem sys = assemble(disc.mesh, disc.spaces, disc.stab, fp, zero_data());
        EXPECT_LE(asym(sys.A), 1e-12 * max_abs(sys.A)) << to_string(kind);
        const SaddleSystem s = saddle_system(sys, true);
        EXPECT_LE(asym(s.K), 1e-12 * max_abs(s.K)) << to_string(kind);
    }
}

TEST(Assembly, FittedLimitIsBitIdentical)
{
    // y > 0.75 removed on a 4x4 grid: the trimming line is a mesh line.
    const TrimmedDomain d = rectangle_domain(0.0, BCTag::dirichlet_weak);
    const Discretization a = make(d, ElementKind::RT, 2, 4, true);
    const Discretization b = make(d, ElementKind::RT, 2, 4, false);
    ASSERT_TRUE(a.mesh.bad().empty());
    FormParams fp;
    fp.gamma = 20.0;
    ProblemData pd = zero_data();
    pd.u_D = [](const Vec2& x) { return Vec2(x(1), -x(0)); };
    pd.f = [](const Vec2& x) { return Vec2(1.0 + x(0), x(1)); };
    fp.stabilized = true;
    const AssembledSystem sa = assemble(a.mesh, a.spaces, a.stab, fp, pd);
    fp.stabilized = false;
    const AssembledSystem sb = assemble(b.mesh, b.spaces, b.stab, fp, pd);
    EXPECT_TRUE(identical(sa.A, sb.A));
    EXPECT_TRUE(identical(sa.B1, sb.B1));
    EXPECT_TRUE(identical(sa.Bm, sb.Bm));
    EXPECT_EQ((sa.F - sb.F).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((sa.G - sb.G).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, MOnlyChangesPressureBoundaryTerms)
{
    const Discretization disc = make(pentagon_domain(1e-13, BCTag::dirichlet_weak), ElementKind::TH, 2, 4, true);
    ProblemData pd = zero_data();
    pd.u_D = [](const Vec2& x) { return Vec2(x(0), 0.0); };
    FormParams fp;
    fp.gamma = 20.0;
    fp.m = 0;
    const AssembledSystem s0 = assemble(disc.mesh, disc.spaces, disc.stab, fp, pd);
    fp.m = 1;
    const AssembledSystem s1 = assemble(disc.mesh, disc.spaces, disc.stab, fp, pd);
    EXPECT_TRUE(identical(s0.A, s1.A));
    EXPECT_TRUE(identical(s0.B1, s1.B1));
    EXPECT_EQ((s0.F - s1.F).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(max_abs(s1.Bm - s1.B1), 1e-15);
    EXPECT_GT(max_abs(s1.Bm - s0.Bm), 1e-3);
    // Pressure basis sums to one: sum_i <psi_i, u_D.n> = int_dOmega x n_x = |Omega|.
    const double area = 1.0 - 0.5 * std::pow(0.75 - 1e-13, 2);
    EXPECT_NEAR((s1.G - s0.G).sum(), area, 1e-12);
    EXPECT_NEAR(s0.pressure_mean.sum(), area, 1e-12);
}

TEST(Assembly, InvalidParametersThrow)
{
    const Discretization disc = make(pentagon_domain(1e-13), ElementKind::RT, 2, 4, true);
    FormParams fp;
    fp.gamma = 0.0;
    EXPECT_THROW(assemble(disc.mesh, disc.spaces, disc.stab, fp, zero_data()), InvalidArgument);
    fp.gamma = 1.0;
    fp.m = 2;
    EXPECT_THROW(assemble(disc.mesh, disc.spaces, disc.stab, fp, zero_data()), InvalidArgument);
    fp.m = 0;
    EXPECT_THROW(assemble(disc.mesh, disc.spaces, Stabilization{}, fp, zero_data()), Error);
}

TEST(Assembly, NormMatricesScaleWithViscosity)
{
    const Discretization disc = make(pentagon_domain(1e-13), ElementKind::N, 2, 4, true);
    const NormMatrices n1 = assemble_norm_matrices(disc.mesh, disc.spaces, disc.stab, 1.0, true);
    const NormMatrices n4 = assemble_norm_matrices(disc.mesh, disc.spaces, disc.stab, 4.0, true);
    EXPECT_LE(max_abs(n4.Nv - 4.0 * n1.Nv), 1e-12 * max_abs(n4.Nv));
    EXPECT_LE(max_abs(n4.Mp - 0.25 * n1.Mp), 1e-12 * max_abs(n1.Mp));
    for (Index i = 0; i < n1.Nv.rows(); ++i) {
        EXPECT_GT(n1.Nv.coeff(i, i), 0.0);
    }
    EXPECT_LE(asym(n1.Nv), 1e-14 * max_abs(n1.Nv));
    EXPECT_LE(asym(n1.Mp), 1e-14 * max_abs(n1.Mp));
}

TEST(Assembly, ConstantPressureNorm)
{
    // Untrimmed unit square, all faces Dirichlet, h = 1/4:
    // ||1||_{0,h}^2 = |Omega| + h |dOmega| = 1 + 0.25 * 4.
    TrimmedDomain d;
    const Discretization disc = make(d, ElementKind::TH, 2, 4, true);
    const NormMatrices nm = assemble_norm_matrices(disc.mesh, disc.spaces, disc.stab, 1.0, true);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(nm.Mp.rows());
    EXPECT_NEAR(one.dot(nm.Mp * one), 2.0, 1e-12);
}

TEST(Assembly, JacobiScaling)
{
    SparseMatrix I(3, 3);
    I.setIdentity();
    Eigen::VectorXd b(3);
    b << 1, 2, 3;
    SparseMatrix K = I;
    Eigen::VectorXd r = b;
    const Eigen::VectorXd s = jacobi_scale(K, r);
    EXPECT_TRUE(identical(K, I));
    EXPECT_EQ((r - b).norm(), 0.0);
    EXPECT_EQ((s - Eigen::VectorXd::Ones(3)).norm(), 0.0);

    SparseMatrix D = 4.0 * I;
    r = b;
    jacobi_scale(D, r);
    EXPECT_TRUE(identical(D, I));
    EXPECT_NEAR(r(2), 1.5, 1e-15);

    const Discretization disc = make(pentagon_domain(1e-13), ElementKind::RT, 2, 8, false);
    FormParams fp;
    fp.gamma = 180.0;
    fp.stabilized = false;
    const AssembledSystem sys = assemble(disc.mesh, disc.spaces, disc.stab, fp, zero_data());
    SaddleSystem ss = saddle_system(sys, true);
    jacobi_scale(ss.K, ss.rhs);
    for (Index i = 0; i < ss.K.rows(); ++i) {
        const double dii = ss.K.coeff(i, i);
        if (i < ss.nu) {
            EXPECT_NEAR(std::abs(dii), 1.0, 1e-14);
        } else {
            EXPECT_EQ(dii, 0.0);
        }
    }
}

TEST(Assembly, MatrixMarketExport)
{
    SparseMatrix M(2, 3);
    M.insert(0, 1) = 2.5;
    M.insert(1, 2) = -1.0;
    const std::string path = ::testing::TempDir() + "trimstokes_mm.mtx";
    write_matrix_market(M, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
    std::string line;
    do {
        std::getline(in, line);
    } while (!line.empty() && line[0] == '%');
    EXPECT_EQ(line, "2 3 2");
    std::remove(path.c_str());
}
