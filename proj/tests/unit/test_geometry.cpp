#include "trimstokes/geometry.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace trimstokes;

namespace {

GeometryMap quadratic_map()
{
    const auto z = uniform_breakpoints(2);
    TensorSplineSpace s(make_open_knot_vector(2, 1, z), make_open_knot_vector(2, 1, z));
    std::vector<Vec2> cp;
    for (Index j = 0; j < s.size(1); ++j) {
        for (Index i = 0; i < s.size(0); ++i) {
            const double u = i / double(s.size(0) - 1);
            const double v = j / double(s.size(1) - 1);
            cp.emplace_back(u + 0.1 * v * v, v + 0.15 * u * u - 0.05 * u * v);
        }
    }
    return GeometryMap::spline(s, cp);
}

TrimmedDomain pentagon(double eps)
{
    TrimmedDomain d;
    d.primitives.push_back(make_convex_polygon({Vec2(0, 0.25 + eps), Vec2(0.75 - eps, 1), Vec2(0, 1)}));
    return d;
}

TrimmedDomain circle_square()
{
    TrimmedDomain d;
    d.map = GeometryMap::affine(Vec2(2, 2), Vec2(0, 0));
    d.primitives.push_back(make_disk(Vec2(0, 0), 0.52));
    return d;
}

} // namespace

TEST(GeometryMap, IdentityAndAffine)
{
    const MapPoint a = GeometryMap::identity().eval(Vec2(0.3, 0.7), 1);
    EXPECT_EQ(a.x, Vec2(0.3, 0.7));
    EXPECT_EQ(a.DF, Mat2::Identity());
    const MapPoint b = GeometryMap::affine(Vec2(2, 2), Vec2::Zero()).eval(Vec2(0.5, 0.25), 1);
    EXPECT_NEAR((b.x - Vec2(1.0, 0.5)).norm(), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(b.det, 4.0);
}

TEST(GeometryMap, SplineJacobianMatchesFiniteDifferences)
{
    const GeometryMap g = quadratic_map();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    const double step = 1e-6;
    for (int t = 0; t < 10; ++t) {
        const Vec2 z(U(rng), U(rng));
        const MapPoint mp = g.eval(z, 2);
        for (int b = 0; b < 2; ++b) {
            Vec2 dz = Vec2::Zero();
            dz(b) = step;
            const MapPoint p = g.eval(z + dz, 1);
            const MapPoint m = g.eval(z - dz, 1);
            const Vec2 fd = (p.x - m.x) / (2 * step);
            EXPECT_NEAR((mp.DF.col(b) - fd).norm(), 0.0, 1e-6);
            for (int i = 0; i < 2; ++i) {
                for (int a = 0; a < 2; ++a) {
                    const double fd2 = (p.DF(i, a) - m.DF(i, a)) / (2 * step);
                    EXPECT_NEAR(mp.d2F[static_cast<std::size_t>(i)](a, b), fd2, 1e-6);
                }
            }
        }
    }
}

TEST(GeometryMap, SingularJacobianIsReported)
{
    const auto z = uniform_breakpoints(1);
    TensorSplineSpace s(make_open_knot_vector(1, 0, z), make_open_knot_vector(1, 0, z));
    const std::vector<Vec2> cp{Vec2(0, 0), Vec2(1, 0), Vec2(0, 0), Vec2(1, 0)};
    EXPECT_THROW(GeometryMap::spline(s, cp).eval(Vec2(0.5, 0.5), 1), GeometryFault);
}

TEST(Piola, SimpleCases)
{
    const Mat2 G = (Mat2() << 1, 2, 3, 4).finished();
    PiolaResult r = piola_transform(Mat2::Identity(), 1.0, Vec2(0.3, -1.0), G);
    EXPECT_EQ(r.v, Vec2(0.3, -1.0));
    EXPECT_EQ(r.Dv, G);
    r = piola_transform(2.0 * Mat2::Identity(), 4.0, Vec2(1, 0), Mat2::Zero());
    EXPECT_NEAR((r.v - Vec2(0.5, 0.0)).norm(), 0.0, 1e-15);
    EXPECT_THROW(piola_transform(Mat2::Identity(), 0.0, Vec2(1, 0), Mat2::Zero()), GeometryFault);
}

namespace {

Vec2 vhat_field(const Vec2& z)
{
    return Vec2(std::sin(z.x()) * z.y() + z.x() * z.x(), std::cos(2 * z.y()) - z.x() * z.y());
}

Mat2 vhat_grad(const Vec2& z)
{
    Mat2 g;
    g << std::cos(z.x()) * z.y() + 2 * z.x(), std::sin(z.x()), -z.y(), -2 * std::sin(2 * z.y()) - z.x();
    return g;
}

} // namespace

TEST(Piola, AffineDivergenceCommutes)
{
    const Mat2 DF = (Mat2() << 1.5, 0.3, -0.2, 0.8).finished();
    const double det = DF.determinant();
    const Vec2 off(0.1, -0.4);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double step = 1e-6;
    for (int t = 0; t < 20; ++t) {
        const Vec2 z(U(rng), U(rng));
        const PiolaResult r = piola_transform(DF, det, vhat_field(z), vhat_grad(z));
        const double div_hat = vhat_grad(z).trace();
        EXPECT_NEAR(r.Dv.trace(), div_hat / det, 1e-12);
        // Finite differences of the mapped field in physical coordinates.
        const Vec2 x = DF * z + off;
        double div_fd = 0.0;
        for (int a = 0; a < 2; ++a) {
            Vec2 dx = Vec2::Zero();
            dx(a) = step;
            const auto field = [&](const Vec2& y) {
                const Vec2 zz = DF.inverse() * (y - off);
                return piola_transform(DF, det, vhat_field(zz), vhat_grad(zz)).v;
            };
            div_fd += (field(x + dx)(a) - field(x - dx)(a)) / (2 * step);
        }
        EXPECT_NEAR(div_fd, div_hat / det, 1e-6);
    }
}

TEST(Piola, CurvedMapGradientMatchesFiniteDifferences)
{
    const GeometryMap g = quadratic_map();
    const double step = 1e-6;
    for (const Vec2& z : {Vec2(0.2, 0.3), Vec2(0.7, 0.6), Vec2(0.45, 0.9)}) {
        const MapPoint mp = g.eval(z, 2);
        const PiolaResult r = piola_transform(mp.DF, mp.det, vhat_field(z), vhat_grad(z), mp.d2F);
        const Mat2 dv_dz = r.Dv * mp.DF;
        for (int b = 0; b < 2; ++b) {
            Vec2 dz = Vec2::Zero();
            dz(b) = step;
            const auto v_at = [&](const Vec2& zz) {
                const MapPoint q = g.eval(zz, 1);
                return piola_transform(q.DF, q.det, vhat_field(zz), vhat_grad(zz)).v;
            };
            const Vec2 fd = (v_at(z + dz) - v_at(z - dz)) / (2 * step);
            EXPECT_NEAR((dv_dz.col(b) - fd).norm(), 0.0, 1e-6);
        }
        // div v = div vhat / det also on curved maps.
        EXPECT_NEAR(r.Dv.trace(), vhat_grad(z).trace() / mp.det, 1e-10);
    }
}

TEST(Primitives, Validation)
{
    EXPECT_THROW(make_half_plane(Vec2(1, 1), 0.0), GeometryFault);
    EXPECT_THROW(make_disk(Vec2(0, 0), -1.0), GeometryFault);
    EXPECT_THROW(make_convex_polygon({Vec2(0, 0), Vec2(0, 1), Vec2(1, 0)}), GeometryFault);
    EXPECT_THROW(make_convex_polygon({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)}), GeometryFault);
}

TEST(RegionInside, Examples)
{
    EXPECT_EQ(region_inside(pentagon(1e-13), Vec2(0.9, 0.9)), Region::inside);
    EXPECT_EQ(region_inside(pentagon(1e-13), Vec2(0.1, 0.9)), Region::removed);
    const TrimmedDomain cs = circle_square();
    EXPECT_EQ(region_inside(cs, Vec2(0.1, 0.1)), Region::removed);
    EXPECT_EQ(region_inside(cs, Vec2(3, 0)), Region::outside);
    EXPECT_EQ(region_inside(cs, Vec2(1, 1)), Region::inside);
    // The trimming curve itself belongs to the removed closure.
    EXPECT_EQ(region_inside(cs, Vec2(0.52, 0.0)), Region::removed);
}

TEST(BoundaryArcs, HalfPlaneClip)
{
    TrimmedDomain d;
    d.primitives.push_back(make_half_plane(Vec2(0, -1), -0.8)); // y > 0.8 removed
    const Box K{Vec2(0.75, 0.75), Vec2(1, 1)};
    const auto arcs = trimming_arcs_in_box(d, K);
    ASSERT_EQ(arcs.size(), 1u);
    EXPECT_NEAR(arcs[0].p0.y(), 0.8, 1e-15);
    EXPECT_NEAR(arcs[0].p1.y(), 0.8, 1e-15);
    EXPECT_NEAR(std::min(arcs[0].p0.x(), arcs[0].p1.x()), 0.75, 1e-15);
    EXPECT_NEAR(std::max(arcs[0].p0.x(), arcs[0].p1.x()), 1.0, 1e-15);
    EXPECT_EQ(arcs[0].normal(0.5), Vec2(0, 1));
    // With the fitted faces: the right face below the cut, the top face is removed.
    const auto all = boundary_arcs_in_element(d, K);
    ASSERT_EQ(all.size(), 2u);
    EXPECT_EQ(all[1].face, face_right);
    EXPECT_NEAR(all[1].length(), 0.05, 1e-15);
}

TEST(BoundaryArcs, DiskClip)
{
    TrimmedDomain d;
    d.primitives.push_back(make_disk(Vec2(0, 0), 0.52));
    const auto arcs = trimming_arcs_in_box(d, Box{Vec2(0.25, 0.25), Vec2(0.5, 0.5)});
    ASSERT_EQ(arcs.size(), 1u);
    const auto& a = arcs[0];
    EXPECT_EQ(a.kind, BoundaryArc::Kind::arc);
    const double t_lo = std::asin(0.25 / 0.52);
    EXPECT_NEAR(std::min(a.theta0, a.theta1), t_lo, 1e-14);
    EXPECT_NEAR(std::max(a.theta0, a.theta1), std::numbers::pi / 2 - t_lo, 1e-14);
    // Normal points toward the disk center.
    EXPECT_LT(a.normal(0.5).dot(a.point(0.5)), 0.0);
    EXPECT_TRUE(trimming_arcs_in_box(d, Box{Vec2(0.5, 0.5), Vec2(0.75, 0.75)}).empty());
    EXPECT_TRUE(trimming_arcs_in_box(d, Box{Vec2(1, 1), Vec2(1.25, 1.25)}).empty());
}

TEST(BoundaryArcs, QuarterCircleLengthAndLocalBound)
{
    const TrimmedDomain d = circle_square();
    for (int n : {4, 8, 16, 32}) {
        const double h = 2.0 / n;
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Box K{Vec2(i * h, j * h), Vec2((i + 1) * h, (j + 1) * h)};
                double len = 0.0;
                for (const auto& a : trimming_arcs_in_box(d, K)) {
                    len += a.length();
                }
                EXPECT_LE(len, 4.0 * h);
                total += len;
            }
        }
        EXPECT_NEAR(total, std::numbers::pi * 0.52 / 2.0, 1e-10 * total);
    }
}

TEST(BoundaryArcs, NormalOffsetsFlipClassification)
{
    const std::vector<TrimmedDomain> domains{pentagon(1e-3), circle_square()};
    for (const auto& d : domains) {
        const Box P = d.patch_box();
        const int n = 8;
        const Vec2 h = P.extent() / n;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Box K{P.lo + Vec2(i * h.x(), j * h.y()), P.lo + Vec2((i + 1) * h.x(), (j + 1) * h.y())};
                for (const auto& a : trimming_arcs_in_box(d, K)) {
                    for (double t : {0.25, 0.5, 0.75}) {
                        const Vec2 x = a.point(t);
                        const Vec2 nn = a.normal(t);
                        EXPECT_NEAR(nn.norm(), 1.0, 1e-14);
                        EXPECT_TRUE(K.contains(x, 1e-10));
                        EXPECT_EQ(region_inside(d, x - 1e-6 * nn), Region::inside);
                        EXPECT_EQ(region_inside(d, x + 1e-6 * nn), Region::removed);
                    }
                }
            }
        }
    }
}

TEST(BoundaryArcs, PentagonFittedFacesStopAtTheCut)
{
    const TrimmedDomain d = pentagon(1e-13);
    // Left face inside element (0,0.25)x(0.25,0.5): only [0.25, 0.25 + eps] survives.
    const auto arcs = boundary_arcs_in_element(d, Box{Vec2(0, 0.25), Vec2(0.25, 0.5)});
    double left = 0.0;
    double trim = 0.0;
    for (const auto& a : arcs) {
        if (a.face == face_left) {
            left += a.length();
        } else if (a.face < 0) {
            trim += a.length();
        }
    }
    EXPECT_NEAR(left, 1e-13, 1e-15);
    EXPECT_GT(trim, 0.3);
    // Top face at x < 0.75 - eps is removed.
    double top = 0.0;
    for (const auto& a : boundary_arcs_in_element(d, Box{Vec2(0.5, 0.75), Vec2(0.75, 1)})) {
        if (a.face == face_top) {
            top += a.length();
        }
    }
    EXPECT_LT(top, 2e-13);
}
