#include "trimstokes/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace trimstokes;

namespace {

TrimmedDomain strip_removed_above(double y)
{
    TrimmedDomain d;
    d.primitives.push_back(make_half_plane(Vec2(0, -1), -y));
    return d;
}

TrimmedMesh mesh_of(const TrimmedDomain& d, Index n)
{
    return build_mesh(d, uniform_breakpoints(n), uniform_breakpoints(n), MeshOptions{});
}

} // namespace

TEST(Mesh, UntrimmedSquare)
{
    TrimmedMesh m = mesh_of(TrimmedDomain{}, 4);
    classify_good_bad(m, 1.0);
    EXPECT_EQ(m.size(), 16);
    EXPECT_EQ(m.count(ElementStatus::interior), 16);
    EXPECT_TRUE(m.bad().empty());
    EXPECT_NEAR(m.area(), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(m.h(), 0.25);
    for (const MeshElement& el : m.elements()) {
        EXPECT_EQ(el.fraction, 1.0);
        for (std::size_t q = 0; q < el.volume.size(); ++q) {
            EXPECT_NEAR((el.volume.params[q] - el.volume.points[q]).norm(), 0.0, 1e-15);
        }
    }
}

TEST(Mesh, DiameterSizeOption)
{
    MeshOptions o;
    o.mesh_size = MeshSize::diameter;
    const TrimmedMesh m = build_mesh(TrimmedDomain{}, uniform_breakpoints(4), uniform_breakpoints(2), o);
    EXPECT_DOUBLE_EQ(m.h(), std::hypot(0.25, 0.5));
    o.mesh_size = MeshSize::edge;
    EXPECT_DOUBLE_EQ(build_mesh(TrimmedDomain{}, uniform_breakpoints(4), uniform_breakpoints(2), o).h(), 0.5);
}

TEST(Mesh, HalfPlaneTopRowIsCut)
{
    TrimmedMesh m = mesh_of(strip_removed_above(0.8), 4);
    EXPECT_EQ(m.count(ElementStatus::cut), 4);
    EXPECT_EQ(m.count(ElementStatus::interior), 12);
    for (Index ix = 0; ix < 4; ++ix) {
        const MeshElement& el = m.element(m.index(ix, 3));
        EXPECT_EQ(el.status, ElementStatus::cut);
        EXPECT_NEAR(el.fraction, 0.2, 1e-14);
    }
    EXPECT_NEAR(m.area(), 0.8, 1e-14);
}

TEST(Mesh, ThetaClassification)
{
    TrimmedMesh m = mesh_of(strip_removed_above(0.8), 4);
    classify_good_bad(m, 1.0);
    EXPECT_EQ(m.bad().size(), 4u);
    for (Index ix = 0; ix < 4; ++ix) {
        EXPECT_EQ(m.element(m.index(ix, 3)).neighbor, m.index(ix, 2));
    }
    classify_good_bad(m, 0.5);
    EXPECT_EQ(m.bad().size(), 4u);
    classify_good_bad(m, 0.2);
    EXPECT_TRUE(m.bad().empty());
    EXPECT_EQ(m.element(m.index(0, 3)).neighbor, -1);
    EXPECT_THROW(classify_good_bad(m, 0.0), InvalidArgument);
    EXPECT_THROW(classify_good_bad(m, 1.5), InvalidArgument);
}

TEST(Mesh, NeighborTieGoesToSmallerIndex)
{
    // Removes the corner triangle y - x > 0.9: element (0,3) is cut, and
    // (0,2) and (1,3) are both interior at the same distance.
    TrimmedDomain d;
    d.primitives.push_back(make_half_plane(Vec2(1, -1) / std::sqrt(2.0), -0.9 / std::sqrt(2.0)));
    TrimmedMesh m = mesh_of(d, 4);
    classify_good_bad(m, 1.0);
    ASSERT_EQ(m.bad().size(), 1u);
    EXPECT_EQ(m.bad()[0], m.index(0, 3));
    EXPECT_EQ(m.element(m.index(0, 3)).neighbor, m.index(0, 2));
}

TEST(Mesh, NoInteriorElementNearby)
{
    TrimmedMesh m = mesh_of(strip_removed_above(0.1), 4);
    EXPECT_EQ(m.count(ElementStatus::interior), 0);
    EXPECT_THROW(classify_good_bad(m, 1.0), MeshFault);
}

TEST(Mesh, PentagonAreaAndSlivers)
{
    const double eps = 1e-13;
    TrimmedDomain d;
    d.primitives.push_back(make_convex_polygon({Vec2(0, 0.25 + eps), Vec2(0.75 - eps, 1), Vec2(0, 1)}));
    for (Index n : {4, 8, 16}) {
        TrimmedMesh m = mesh_of(d, n);
        const double tri = 0.5 * (0.75 - eps) * (0.75 - eps);
        EXPECT_NEAR(m.area(), 1.0 - tri, 1e-14) << n;
        classify_good_bad(m, 1.0);
        // Diagonal elements are cut, and those touched only along the
        // sliver have tiny fractions but stay active.
        double fmin = 1.0;
        for (Index e : m.bad()) {
            fmin = std::min(fmin, m.element(e).fraction);
        }
        EXPECT_LT(fmin, 1e-10) << n;
        EXPECT_GT(fmin, 0.0) << n;
    }
}

TEST(Mesh, AffineParamsInvertPoints)
{
    TrimmedDomain d;
    d.map = GeometryMap::affine(Vec2(2, 2), Vec2(0, 0));
    d.primitives.push_back(make_disk(Vec2(0, 0), 0.52));
    TrimmedMesh m = mesh_of(d, 8);
    for (const MeshElement& el : m.elements()) {
        for (std::size_t q = 0; q < el.volume.size(); ++q) {
            EXPECT_TRUE(el.param.contains(el.volume.params[q], 1e-14));
        }
        for (const BoundaryRule& br : el.boundary) {
            EXPECT_EQ(br.params.size(), br.points.size());
            EXPECT_EQ(br.element, m.index(el.ix, el.iy));
        }
    }
}

TEST(Mesh, CurvedMapAreaAndBoundary)
{
    // Bilinear trapezoid with corners (0,0), (2,0), (0,1), (1,1): area 1.5.
    const KnotVector kv = make_open_knot_vector(1, 0, uniform_breakpoints(1));
    const TensorSplineSpace S(kv, kv);
    TrimmedDomain d;
    d.map = GeometryMap::spline(S, {Vec2(0, 0), Vec2(2, 0), Vec2(0, 1), Vec2(1, 1)});
    TrimmedMesh m = mesh_of(d, 4);
    EXPECT_NEAR(m.area(), 1.5, 1e-13);
    double perimeter = 0.0;
    for (const MeshElement& el : m.elements()) {
        for (const BoundaryRule& br : el.boundary) {
            perimeter += br.measure();
        }
    }
    EXPECT_NEAR(perimeter, 2.0 + 1.0 + 1.0 + std::sqrt(2.0), 1e-13);
}
