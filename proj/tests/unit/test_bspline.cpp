#include "trimstokes/bspline.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trimstokes;

namespace {

// Plain recursive Cox-de Boor over the full knot vector, right-continuous
// except at the last knot.
double cox_de_boor(const std::vector<double>& U, int i, int p, double x)
{
    if (p == 0) {
        const double a = U[static_cast<std::size_t>(i)];
        const double b = U[static_cast<std::size_t>(i + 1)];
        if (a <= x && x < b) {
            return 1.0;
        }
        if (x == U.back() && b == U.back() && a < b) {
            return 1.0;
        }
        return 0.0;
    }
    double s = 0.0;
    const double d1 = U[static_cast<std::size_t>(i + p)] - U[static_cast<std::size_t>(i)];
    const double d2 = U[static_cast<std::size_t>(i + p + 1)] - U[static_cast<std::size_t>(i + 1)];
    if (d1 > 0.0) {
        s += (x - U[static_cast<std::size_t>(i)]) / d1 * cox_de_boor(U, i, p - 1, x);
    }
    if (d2 > 0.0) {
        s += (U[static_cast<std::size_t>(i + p + 1)] - x) / d2 * cox_de_boor(U, i + 1, p - 1, x);
    }
    return s;
}

KnotVector uniform(int k, int alpha, Index nel)
{
    const auto z = uniform_breakpoints(nel);
    return make_open_knot_vector(k, alpha, z);
}

} // namespace

TEST(KnotVector, QuadraticOneInternalKnot)
{
    const std::vector<double> z{0.0, 0.5, 1.0};
    const KnotVector kv = make_open_knot_vector(2, 1, z);
    EXPECT_EQ(kv.knots(), (std::vector<double>{0, 0, 0, 0.5, 1, 1, 1}));
    EXPECT_EQ(kv.size(), 4);
}

TEST(KnotVector, LinearBernstein)
{
    const std::vector<double> z{0.0, 1.0};
    const KnotVector kv = make_open_knot_vector(1, 0, z);
    EXPECT_EQ(kv.knots(), (std::vector<double>{0, 0, 1, 1}));
    EXPECT_EQ(kv.size(), 2);
}

TEST(KnotVector, CubicDimensionCount)
{
    EXPECT_EQ(uniform(3, 2, 4).size(), 7);
    // n = k+1 + (M-2)(k-alpha)
    EXPECT_EQ(uniform(3, 1, 4).size(), 4 + 3 * 2);
}

TEST(KnotVector, RejectsBadInput)
{
    const std::vector<double> nonmono{0.0, 0.6, 0.4, 1.0};
    EXPECT_THROW(make_open_knot_vector(2, 1, nonmono), InvalidArgument);
    const std::vector<double> z{0.0, 1.0};
    EXPECT_THROW(make_open_knot_vector(2, 2, z), InvalidArgument);
    EXPECT_THROW(make_open_knot_vector(2, -1, z), InvalidArgument);
    EXPECT_THROW(uniform(2, 1, 2).eval(1.5, 0), InvalidArgument);
    EXPECT_THROW(uniform(2, 1, 2).eval(-0.1, 0), InvalidArgument);
}

TEST(KnotVector, BernsteinMidpoint)
{
    const BasisValues b = uniform(2, 1, 1).eval(0.5, 0);
    EXPECT_EQ(b.first, 0);
    EXPECT_NEAR(b.ders(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(b.ders(0, 1), 0.5, 1e-15);
    EXPECT_NEAR(b.ders(0, 2), 0.25, 1e-15);
}

TEST(KnotVector, MatchesRecursiveOracle)
{
    for (int k = 1; k <= 4; ++k) {
        for (int alpha = 0; alpha < k; ++alpha) {
            const KnotVector kv = uniform(k, alpha, 3);
            for (double x : {0.0, 0.3, 1.0 / 3.0, 0.5, 0.77, 1.0}) {
                const BasisValues b = kv.eval(x, 0);
                for (Index i = 0; i < kv.size(); ++i) {
                    const Index j = i - b.first;
                    const double got = (j >= 0 && j <= k) ? b.ders(0, j) : 0.0;
                    EXPECT_NEAR(got, cox_de_boor(kv.knots(), static_cast<int>(i), k, x), 1e-14)
                        << "k=" << k << " alpha=" << alpha << " x=" << x << " i=" << i;
                }
            }
        }
    }
}

TEST(KnotVector, PartitionOfUnityAndDerivativeSum)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const KnotVector kv = uniform(3, 1, 5);
    for (int t = 0; t < 100; ++t) {
        const BasisValues b = kv.eval(U(rng), 1);
        EXPECT_NEAR(b.ders.row(0).sum(), 1.0, 1e-12);
        EXPECT_NEAR(b.ders.row(1).sum(), 0.0, 1e-10);
    }
}

TEST(KnotVector, LocalSupport)
{
    const KnotVector kv = uniform(2, 1, 4);
    const auto& U = kv.knots();
    for (Index i = 0; i < kv.size(); ++i) {
        const double a = U[static_cast<std::size_t>(i)];
        const double b = U[static_cast<std::size_t>(i + 3)];
        for (double x : {0.0, 0.1, 0.3, 0.6, 0.9, 1.0}) {
            if (x >= a && x <= b) {
                continue;
            }
            const BasisValues v = kv.eval(x, 0);
            const Index j = i - v.first;
            if (j >= 0 && j <= 2) {
                EXPECT_EQ(v.ders(0, j), 0.0);
            }
        }
        const auto [e0, e1] = kv.support_elements(i);
        EXPECT_DOUBLE_EQ(kv.breakpoints()[static_cast<std::size_t>(e0)], a);
        EXPECT_DOUBLE_EQ(kv.breakpoints()[static_cast<std::size_t>(e1 + 1)], b);
    }
}

TEST(KnotVector, FirstDerivativeMatchesFiniteDifferences)
{
    const KnotVector kv = uniform(3, 2, 4);
    const double step = 1e-6;
    for (double x : {0.1, 0.37, 0.6, 0.88}) {
        const Index e = kv.element_of(x);
        const BasisValues b = kv.eval_on_element(e, x, 1);
        const BasisValues bp = kv.eval_on_element(e, x + step, 0);
        const BasisValues bm = kv.eval_on_element(e, x - step, 0);
        for (int j = 0; j <= 3; ++j) {
            const double fd = (bp.ders(0, j) - bm.ders(0, j)) / (2 * step);
            EXPECT_NEAR(b.ders(1, j), fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(KnotVector, HigherDerivativesMatchFiniteDifferences)
{
    const KnotVector kv = uniform(4, 2, 3);
    const double step = 1e-4;
    const double x = 0.45;
    const Index e = kv.element_of(x);
    const BasisValues b = kv.eval_on_element(e, x, 3);
    const BasisValues bp = kv.eval_on_element(e, x + step, 2);
    const BasisValues bm = kv.eval_on_element(e, x - step, 2);
    for (int j = 0; j <= 4; ++j) {
        EXPECT_NEAR(b.ders(3, j), (bp.ders(2, j) - bm.ders(2, j)) / (2 * step), 1e-4 * (1 + std::abs(b.ders(3, j))));
    }
}

TEST(Refinement, BisectsIntervals)
{
    const std::vector<double> z{0.0, 1.0};
    EXPECT_EQ(uniform_refine(make_open_knot_vector(2, 1, z), 1).breakpoints(), (std::vector<double>{0, 0.5, 1}));
    const std::vector<double> z2{0.0, 0.5, 1.0};
    const KnotVector r = uniform_refine(make_open_knot_vector(2, 1, z2), 2);
    ASSERT_EQ(r.breakpoints().size(), 9u);
    for (std::size_t i = 0; i + 1 < 9; ++i) {
        EXPECT_NEAR(r.breakpoints()[i + 1] - r.breakpoints()[i], 0.125, 1e-15);
    }
    EXPECT_EQ(r.degree(), 2);
    EXPECT_EQ(r.regularity(), 1);
}

TEST(Refinement, NestedSpacesReproduceCoarseFunctions)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int alpha : {0, 1, 2}) {
        const KnotVector coarse = uniform(3, alpha, 3);
        const KnotVector fine = uniform_refine(coarse, 2);
        Eigen::VectorXd c(coarse.size());
        for (Index i = 0; i < c.size(); ++i) {
            c(i) = U(rng) - 0.5;
        }
        const Eigen::VectorXd cf = refine_coefficients(coarse, fine, c);
        ASSERT_EQ(cf.size(), fine.size());
        for (int t = 0; t < 20; ++t) {
            const double x = U(rng);
            EXPECT_NEAR(eval_spline(coarse, c, x), eval_spline(fine, cf, x), 1e-13);
        }
    }
}

TEST(TensorSpace, IndexingAndShapeRegularity)
{
    const TensorSplineSpace s(uniform(2, 1, 4), uniform(1, 0, 2));
    EXPECT_EQ(s.size(0), 6);
    EXPECT_EQ(s.size(1), 3);
    EXPECT_EQ(s.size(), 18);
    EXPECT_EQ(s.index(2, 1), 8);
    EXPECT_EQ(s.num_elements(), 8);
    EXPECT_GE(s.shape_regularity(), 0.1);
}
