#pragma once

// Geometry map of the untrimmed patch, Piola transform, trimming primitives
// (removed regions, physical coordinates) and the exact pieces of the
// boundary that fall inside an axis-aligned element box.

#include "trimstokes/bspline.hpp"
#include "trimstokes/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace trimstokes {

struct Box {
    Vec2 lo = Vec2::Zero();
    Vec2 hi = Vec2::Ones();

    Vec2 center() const { return 0.5 * (lo + hi); }
    Vec2 extent() const { return hi - lo; }
    double area() const { return (hi - lo).prod(); }
    double diameter() const { return (hi - lo).norm(); }
    bool contains(const Vec2& x, double tol = 0.0) const
    {
        return x.x() >= lo.x() - tol && x.x() <= hi.x() + tol && x.y() >= lo.y() - tol &&
               x.y() <= hi.y() + tol;
    }
};

/// Point of the map together with its first (and optionally second) derivatives.
/// `d2F[i](a, b)` = d^2 F_i / (d zeta_a d zeta_b).
struct MapPoint {
    Vec2 x = Vec2::Zero();
    Mat2 DF = Mat2::Identity();
    double det = 1.0;
    std::array<Mat2, 2> d2F{Mat2::Zero(), Mat2::Zero()};
};

class GeometryMap {
public:
    enum class Kind { identity, affine, spline };

    static GeometryMap identity();
    /// x = offset + scale .* zeta
    static GeometryMap affine(const Vec2& scale, const Vec2& offset);
    /// Control net indexed row-major like TensorSplineSpace::index.
    static GeometryMap spline(TensorSplineSpace space, std::vector<Vec2> control_points);

    Kind kind() const { return kind_; }
    bool is_affine() const { return kind_ != Kind::spline; }

    /// Evaluate at zeta in the closed unit square. nderiv in {0,1,2}.
    /// Throws GeometryFault if det DF <= 1e-14 (nderiv >= 1).
    MapPoint eval(const Vec2& zeta, int nderiv) const;

    /// Inverse of an affine map; throws for spline maps.
    Vec2 inverse(const Vec2& x) const;

    /// Physical bounding box of the image of [a,b] (exact for affine maps).
    Box image_of(const Box& parametric) const;

    const Vec2& scale() const { return scale_; }
    const Vec2& offset() const { return offset_; }

private:
    Kind kind_ = Kind::identity;
    Vec2 scale_ = Vec2::Ones();
    Vec2 offset_ = Vec2::Zero();
    TensorSplineSpace space_;
    std::vector<Vec2> control_;
};

struct PiolaResult {
    Vec2 v;
    Mat2 Dv;
};

/// Contravariant Piola push-forward v = DF vhat / det DF of a parametric field
/// and its physical gradient. `grad_vhat(a, b)` = d vhat_a / d zeta_b.
/// This overload assumes the map is affine on the element.
PiolaResult piola_transform(const Mat2& DF, double detDF, const Vec2& vhat, const Mat2& grad_vhat);

/// Full chain rule including the second derivatives of the map.
PiolaResult piola_transform(const Mat2& DF, double detDF, const Vec2& vhat, const Mat2& grad_vhat,
                            const std::array<Mat2, 2>& d2F);

/// Removed region n.x < c (n unit).
struct HalfPlane {
    Vec2 normal;
    double offset = 0.0;
};

/// Removed region |x - center| < radius.
struct Disk {
    Vec2 center;
    double radius = 0.0;
};

/// Removed region: interior of a convex polygon, vertices counter-clockwise.
/// Stored as the intersection of its edge half-planes.
struct ConvexPolygon {
    std::vector<Vec2> vertices;
    std::vector<Vec2> outward_normals;
    std::vector<double> offsets;
};

using TrimmingPrimitive = std::variant<HalfPlane, Disk, ConvexPolygon>;

HalfPlane make_half_plane(const Vec2& normal, double offset);
Disk make_disk(const Vec2& center, double radius);
ConvexPolygon make_convex_polygon(std::vector<Vec2> vertices);

/// Negative inside the removed region, positive outside (a level function,
/// not a true distance for polygons).
double primitive_level(const TrimmingPrimitive& p, const Vec2& x);

/// Open interval of the line {x_axis = s} removed by the primitive, expressed
/// in the other coordinate. Infinite ends are +-inf.
std::optional<std::array<double, 2>> slice_removed(const TrimmingPrimitive& p, int axis, double s);

enum class BCTag { dirichlet_strong, dirichlet_weak, neumann };

std::string to_string(BCTag tag);
BCTag bc_tag_from_string(const std::string& name);

/// Faces of the untrimmed patch: 0 = left (zeta_0 = 0), 1 = right, 2 = bottom, 3 = top.
enum Face : int { face_left = 0, face_right = 1, face_bottom = 2, face_top = 3 };

struct TrimmedDomain {
    GeometryMap map = GeometryMap::identity();
    std::vector<TrimmingPrimitive> primitives;
    std::array<BCTag, 4> faces{BCTag::dirichlet_weak, BCTag::dirichlet_weak, BCTag::dirichlet_weak,
                               BCTag::dirichlet_weak};

    /// Physical box of the patch (affine maps only).
    Box patch_box() const { return map.image_of(Box{}); }
    bool trimmed() const { return !primitives.empty(); }

    /// Throws GeometryFault / InvalidArgument on inconsistent data
    /// (trimming with a spline map, no Dirichlet boundary, bad primitives).
    void validate() const;
};

enum class Region { inside, removed, outside };

/// Classify a physical point. Points within 1e-14 of a removed region count as removed.
Region region_inside(const TrimmedDomain& domain, const Vec2& x);

/// A line segment or circular arc of the boundary of the trimmed domain,
/// restricted to one element. Parameter t runs over [0,1].
struct BoundaryArc {
    enum class Kind { segment, arc };
    Kind kind = Kind::segment;
    Vec2 p0 = Vec2::Zero();
    Vec2 p1 = Vec2::Zero();
    Vec2 center = Vec2::Zero();
    double radius = 0.0;
    double theta0 = 0.0;
    double theta1 = 0.0;
    Vec2 segment_normal = Vec2::Zero();
    BCTag tag = BCTag::dirichlet_weak;
    int face = -1;       ///< -1 for the trimming curve
    Index element = -1;  ///< owning element (set by the mesh)

    Vec2 point(double t) const;
    /// Unit normal pointing out of the trimmed domain.
    Vec2 normal(double t) const;
    /// |dx/dt|
    double speed() const;
    double length() const { return speed(); }
};

/// Exact pieces of the trimming curve and of the fitted patch faces inside box K.
/// Trimming pieces carry BCTag::dirichlet_weak. Requires an affine map.
std::vector<BoundaryArc> boundary_arcs_in_element(const TrimmedDomain& domain, const Box& K);

/// Only the trimming-curve pieces inside K.
std::vector<BoundaryArc> trimming_arcs_in_box(const TrimmedDomain& domain, const Box& K);

} // namespace trimstokes
