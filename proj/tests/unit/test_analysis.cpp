#include "trimstokes/analysis.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trimstokes;

namespace {

// Central differences of the exact fields.
Mat2 fd_grad(const VectorField& u, const Vec2& x, double h)
{
    Mat2 G;
    for (int d = 0; d < 2; ++d) {
        const Vec2 e = h * Vec2::Unit(d);
        G.col(d) = (u(x + e) - u(x - e)) / (2 * h);
    }
    return G;
}

Vec2 fd_laplacian(const VectorField& u, const Vec2& x, double h)
{
    Vec2 L = -4.0 * u(x);
    for (int d = 0; d < 2; ++d) {
        const Vec2 e = h * Vec2::Unit(d);
        L += u(x + e) + u(x - e);
    }
    return L / (h * h);
}

void check_case(const ManufacturedCase& mc, const Box& box)
{
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const ProblemData pd = mc.data();
    for (int i = 0; i < 20; ++i) {
        const Vec2 x = box.lo + Vec2(U(rng), U(rng)).cwiseProduct(box.extent());
        const Mat2 G = fd_grad(mc.u, x, 1e-5);
        EXPECT_LE((G - mc.grad_u(x)).norm(), 1e-7 * (1.0 + G.norm())) << mc.name;
        const double hp = 1e-5;
        const Vec2 gp((mc.p(x + hp * Vec2::UnitX()) - mc.p(x - hp * Vec2::UnitX())) / (2 * hp),
                      (mc.p(x + hp * Vec2::UnitY()) - mc.p(x - hp * Vec2::UnitY())) / (2 * hp));
        const Vec2 f = -mc.mu * fd_laplacian(mc.u, x, 1e-3) + gp;
        EXPECT_LE((f - mc.f(x)).norm(), 1e-4 * (1.0 + f.norm())) << mc.name;
        EXPECT_NEAR(mc.g(x), G.trace(), 1e-7) << mc.name;
        EXPECT_EQ(pd.u_D(x), mc.u(x));
        const Vec2 n = Vec2(U(rng) - 0.5, U(rng) - 0.5).normalized();
        const Vec2 sigma = mc.mu * mc.grad_u(x) * n - mc.p(x) * n;
        EXPECT_LE((pd.sigma_N(x, n) - sigma).norm(), 1e-13 * (1.0 + sigma.norm()));
    }
}

} // namespace

TEST(Analysis, ManufacturedPentagonData)
{
    check_case(pentagon_case(1.0, 0.0), Box{Vec2(0, 0), Vec2(1, 1)});
    check_case(pentagon_case(2.5, 0.3), Box{Vec2(0, 0), Vec2(1, 1)});
}

TEST(Analysis, ManufacturedCircleData)
{
    check_case(circle_case(1.0), Box{Vec2(0, 0), Vec2(2, 2)});
    check_case(circle_case(0.5), Box{Vec2(0, 0), Vec2(2, 2)});
    // solenoidal
    EXPECT_NEAR(circle_case(1.0).g(Vec2(1.3, 0.4)), 0.0, 1e-14);
}

TEST(Analysis, DomainAreas)
{
    const double eps = 1e-13;
    EXPECT_NEAR(integrate(pentagon_domain(eps), 8, 4, [](const Vec2&) { return 1.0; }),
                1.0 - 0.5 * std::pow(0.75 - eps, 2), 1e-14);
    EXPECT_NEAR(integrate(rectangle_domain(0.1), 8, 4, [](const Vec2&) { return 1.0; }), 0.85, 1e-14);
    EXPECT_NEAR(integrate(circle_square_domain(), 8, 6, [](const Vec2&) { return 1.0; }),
                4.0 - M_PI * 0.52 * 0.52 / 4.0, 1e-10);
    EXPECT_NEAR(integrate(cylinder_domain(), 16, 6, [](const Vec2&) { return 1.0; }),
                2.2 * 0.41 - M_PI * 0.05 * 0.05, 1e-10);
}

TEST(Analysis, LogLogSlope)
{
    const std::vector<double> h{0.5, 0.25, 0.125};
    std::vector<double> e;
    for (double x : h) {
        e.push_back(3.0 * x * x * x);
    }
    EXPECT_NEAR(loglog_slope(h, e), 3.0, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), InvalidArgument);
}

TEST(Analysis, MeanBorderOnlyWithoutNeumann)
{
    SolverOptions o;
    o.element = {ElementKind::RT, 1, -1};
    const Discretization a = discretize(pentagon_domain(1e-13), 4, 4, o, nullptr);
    EXPECT_TRUE(needs_mean_border(a.mesh));
    const Discretization b = discretize(circle_square_domain(), 4, 4, o, nullptr);
    EXPECT_FALSE(needs_mean_border(b.mesh));
}

TEST(Analysis, SolenoidalPolynomialIsExactOnTrimmedDomains)
{
    // u = (x^2, -2xy), p = x lies in every k = 2 velocity/pressure pair.
    ManufacturedCase mc;
    mc.name = "quadratic";
    mc.u = [](const Vec2& x) { return Vec2(x(0) * x(0), -2 * x(0) * x(1)); };
    mc.grad_u = [](const Vec2& x) { return (Mat2() << 2 * x(0), 0, -2 * x(1), -2 * x(0)).finished(); };
    mc.p = [](const Vec2& x) { return x(0); };
    mc.f = [](const Vec2&) { return Vec2(-1, 0); };
    mc.g = [](const Vec2&) { return 0.0; };
    for (ElementKind kind : {ElementKind::RT, ElementKind::N, ElementKind::TH}) {
        SolverOptions o;
        o.element = {kind, 2, -1};
        o.form.gamma = 180.0;
        const CaseRun r = run_case(pentagon_domain(1e-13), 8, 8, o, mc);
        EXPECT_LE(r.errors.e1h, 1e-9) << to_string(kind);
        EXPECT_LE(r.errors.e0h, 1e-9) << to_string(kind);
        EXPECT_TRUE(r.mean_border);
    }
}

TEST(Analysis, RaviartThomasIsDivergenceFreeOnUntrimmedSquare)
{
    TrimmedDomain d;
    d.faces = {BCTag::dirichlet_strong, BCTag::dirichlet_strong, BCTag::dirichlet_strong, BCTag::dirichlet_strong};
    SolverOptions o;
    o.element = {ElementKind::RT, 2, -1};
    o.form.gamma = 20.0;
    const CaseRun r = run_case(d, 8, 8, o, pentagon_case(1.0, 0.0));
    EXPECT_LE(r.errors.ediv, 1e-12);
    EXPECT_GT(r.errors.e1h, 1e-6);
}

TEST(Analysis, InfSupCollapsesWithoutStabilization)
{
    SolverOptions o;
    o.element = {ElementKind::TH, 2, -1};
    o.form.stabilized = false;
    const auto ns = infsup_table(pentagon_domain(1e-13, BCTag::dirichlet_weak), o, {2});
    ASSERT_EQ(ns.size(), 1u);
    EXPECT_TRUE(ns[0].error.empty());
    EXPECT_LT(ns[0].beta0, 1e-5);
    o.form.stabilized = true;
    const auto st = infsup_table(pentagon_domain(1e-13, BCTag::dirichlet_weak), o, {2});
    EXPECT_GT(st[0].beta0, 0.1);
    EXPECT_GT(st[0].beta1, 0.1);
}
