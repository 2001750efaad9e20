#include "trimstokes/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace trimstokes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDetTol = 1e-14;
constexpr double kGrazeTol = 1e-12;

} // namespace

GeometryMap GeometryMap::identity()
{
    return GeometryMap{};
}

GeometryMap GeometryMap::affine(const Vec2& scale, const Vec2& offset)
{
    if (!(scale.x() > 0.0 && scale.y() > 0.0)) {
        throw GeometryFault("affine map scale must be positive");
    }
    GeometryMap g;
    g.kind_ = Kind::affine;
    g.scale_ = scale;
    g.offset_ = offset;
    return g;
}

GeometryMap GeometryMap::spline(TensorSplineSpace space, std::vector<Vec2> control_points)
{
    if (static_cast<Index>(control_points.size()) != space.size()) {
        throw InvalidArgument("control net size does not match the spline space");
    }
    GeometryMap g;
    g.kind_ = Kind::spline;
    g.space_ = std::move(space);
    g.control_ = std::move(control_points);
    return g;
}

MapPoint GeometryMap::eval(const Vec2& zeta, int nderiv) const
{
    MapPoint mp;
    if (kind_ != Kind::spline) {
        mp.x = offset_ + scale_.cwiseProduct(zeta);
        mp.DF = scale_.asDiagonal();
        mp.det = scale_.prod();
        return mp;
    }
    const int nd = std::min(nderiv, 2);
    const BasisValues bu = space_.dir(0).eval(std::clamp(zeta.x(), 0.0, 1.0), nd);
    const BasisValues bv = space_.dir(1).eval(std::clamp(zeta.y(), 0.0, 1.0), nd);
    const auto at = [](const BasisValues& b, int d, int j) {
        return d < b.ders.rows() ? b.ders(d, j) : 0.0;
    };
    mp.x.setZero();
    mp.DF.setZero();
    for (int j = 0; j < bv.ders.cols(); ++j) {
        for (int i = 0; i < bu.ders.cols(); ++i) {
            const Vec2& P = control_[static_cast<std::size_t>(space_.index(bu.first + i, bv.first + j))];
            mp.x += at(bu, 0, i) * at(bv, 0, j) * P;
            if (nd >= 1) {
                mp.DF.col(0) += at(bu, 1, i) * at(bv, 0, j) * P;
                mp.DF.col(1) += at(bu, 0, i) * at(bv, 1, j) * P;
            }
            if (nd >= 2) {
                const double d00 = at(bu, 2, i) * at(bv, 0, j);
                const double d01 = at(bu, 1, i) * at(bv, 1, j);
                const double d11 = at(bu, 0, i) * at(bv, 2, j);
                for (int c = 0; c < 2; ++c) {
                    mp.d2F[static_cast<std::size_t>(c)](0, 0) += d00 * P(c);
                    mp.d2F[static_cast<std::size_t>(c)](0, 1) += d01 * P(c);
                    mp.d2F[static_cast<std::size_t>(c)](1, 0) += d01 * P(c);
                    mp.d2F[static_cast<std::size_t>(c)](1, 1) += d11 * P(c);
                }
            }
        }
    }
    mp.det = mp.DF.determinant();
    if (nd >= 1 && !(mp.det > kDetTol)) {
        throw GeometryFault("singular geometry Jacobian (det DF <= 1e-14)");
    }
    return mp;
}

Vec2 GeometryMap::inverse(const Vec2& x) const
{
    if (kind_ == Kind::spline) {
        throw GeometryFault("inverse is only available for identity/affine maps");
    }
    return (x - offset_).cwiseQuotient(scale_);
}

Box GeometryMap::image_of(const Box& parametric) const
{
    if (kind_ != Kind::spline) {
        return Box{offset_ + scale_.cwiseProduct(parametric.lo), offset_ + scale_.cwiseProduct(parametric.hi)};
    }
    // Convex-hull bound of the control points would be coarser; sample instead.
    Box b{Vec2::Constant(kInf), Vec2::Constant(-kInf)};
    constexpr int n = 16;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const Vec2 z = parametric.lo + Vec2(i / double(n), j / double(n)).cwiseProduct(parametric.extent());
            const Vec2 x = eval(z, 0).x;
            b.lo = b.lo.cwiseMin(x);
            b.hi = b.hi.cwiseMax(x);
        }
    }
    return b;
}

PiolaResult piola_transform(const Mat2& DF, double detDF, const Vec2& vhat, const Mat2& grad_vhat)
{
    if (!(detDF > 0.0)) {
        throw GeometryFault("Piola transform requires det DF > 0");
    }
    PiolaResult r;
    r.v = DF * vhat / detDF;
    r.Dv = DF * grad_vhat * DF.inverse() / detDF;
    return r;
}

PiolaResult piola_transform(const Mat2& DF, double detDF, const Vec2& vhat, const Mat2& grad_vhat,
                            const std::array<Mat2, 2>& d2F)
{
    if (!(detDF > 0.0)) {
        throw GeometryFault("Piola transform requires det DF > 0");
    }
    // d(det)/d zeta_b from d/d zeta_b of DF(i, a) = d2F[i](a, b).
    Vec2 ddet;
    for (int b = 0; b < 2; ++b) {
        ddet(b) = d2F[0](0, b) * DF(1, 1) + DF(0, 0) * d2F[1](1, b) - d2F[0](1, b) * DF(1, 0) -
                  DF(0, 1) * d2F[1](0, b);
    }
    const Vec2 w = DF * vhat;
    Mat2 dW; // d(DF vhat / det)_i / d zeta_b
    for (int i = 0; i < 2; ++i) {
        for (int b = 0; b < 2; ++b) {
            double s = 0.0;
            for (int a = 0; a < 2; ++a) {
                s += d2F[static_cast<std::size_t>(i)](a, b) * vhat(a) + DF(i, a) * grad_vhat(a, b);
            }
            dW(i, b) = s / detDF - ddet(b) * w(i) / (detDF * detDF);
        }
    }
    PiolaResult r;
    r.v = w / detDF;
    r.Dv = dW * DF.inverse();
    return r;
}

HalfPlane make_half_plane(const Vec2& normal, double offset)
{
    if (std::abs(normal.norm() - 1.0) > 1e-14) {
        throw GeometryFault("half-plane normal must have unit length");
    }
    return HalfPlane{normal, offset};
}

Disk make_disk(const Vec2& center, double radius)
{
    if (!(radius > 0.0)) {
        throw GeometryFault("disk radius must be positive");
    }
    return Disk{center, radius};
}

ConvexPolygon make_convex_polygon(std::vector<Vec2> vertices)
{
    const std::size_t n = vertices.size();
    if (n < 3) {
        throw GeometryFault("polygon needs at least three vertices");
    }
    ConvexPolygon poly;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        const Vec2& c = vertices[(i + 2) % n];
        const Vec2 e1 = b - a;
        const Vec2 e2 = c - b;
        const double cross = e1.x() * e2.y() - e1.y() * e2.x();
        if (!(cross > 0.0)) {
            throw GeometryFault("polygon must be convex, non-degenerate and counter-clockwise");
        }
        const double len = e1.norm();
        const Vec2 nout(e1.y() / len, -e1.x() / len);
        poly.outward_normals.push_back(nout);
        poly.offsets.push_back(nout.dot(a));
    }
    poly.vertices = std::move(vertices);
    return poly;
}

double primitive_level(const TrimmingPrimitive& p, const Vec2& x)
{
    return std::visit(
        [&](const auto& prim) -> double {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, HalfPlane>) {
                return prim.normal.dot(x) - prim.offset;
            } else if constexpr (std::is_same_v<T, Disk>) {
                return (x - prim.center).norm() - prim.radius;
            } else {
                double m = -kInf;
                for (std::size_t i = 0; i < prim.offsets.size(); ++i) {
                    m = std::max(m, prim.outward_normals[i].dot(x) - prim.offsets[i]);
                }
                return m;
            }
        },
        p);
}

namespace {

// Removed interval of {a*s + b*t < c} in t. A line parallel to the slice
// within `tol` of it counts as removing the whole slice.
std::optional<std::array<double, 2>> half_plane_slice(double a, double b, double c, double s, double tol)
{
    const double rhs = c - a * s;
    if (std::abs(b) < 1e-15) {
        if (rhs > -tol) {
            return std::array<double, 2>{-kInf, kInf};
        }
        return std::nullopt;
    }
    if (b > 0.0) {
        return std::array<double, 2>{-kInf, rhs / b};
    }
    return std::array<double, 2>{rhs / b, kInf};
}

std::optional<std::array<double, 2>> slice_with_tol(const TrimmingPrimitive& p, int axis, double s, double tol)
{
    const int o = 1 - axis;
    return std::visit(
        [&](const auto& prim) -> std::optional<std::array<double, 2>> {
            using T = std::decay_t<decltype(prim)>;
            if constexpr (std::is_same_v<T, HalfPlane>) {
                return half_plane_slice(prim.normal(axis), prim.normal(o), prim.offset, s, tol);
            } else if constexpr (std::is_same_v<T, Disk>) {
                const double r = prim.radius;
                const double d = s - prim.center(axis);
                const double disc = r * r - d * d;
                if (disc <= 0.0) {
                    return std::nullopt;
                }
                const double half = std::sqrt(disc);
                return std::array<double, 2>{prim.center(o) - half, prim.center(o) + half};
            } else {
                double lo = -kInf;
                double hi = kInf;
                for (std::size_t i = 0; i < prim.offsets.size(); ++i) {
                    const Vec2& n = prim.outward_normals[i];
                    const auto iv = half_plane_slice(n(axis), n(o), prim.offsets[i], s, tol);
                    if (!iv) {
                        return std::nullopt;
                    }
                    lo = std::max(lo, (*iv)[0]);
                    hi = std::min(hi, (*iv)[1]);
                }
                if (!(hi > lo)) {
                    return std::nullopt;
                }
                return std::array<double, 2>{lo, hi};
            }
        },
        p);
}

} // namespace

std::optional<std::array<double, 2>> slice_removed(const TrimmingPrimitive& p, int axis, double s)
{
    return slice_with_tol(p, axis, s, 0.0);
}

std::string to_string(BCTag tag)
{
    switch (tag) {
    case BCTag::dirichlet_strong:
        return "dirichlet_strong";
    case BCTag::dirichlet_weak:
        return "dirichlet_weak";
    case BCTag::neumann:
        return "neumann";
    }
    return "unknown";
}

BCTag bc_tag_from_string(const std::string& name)
{
    if (name == "dirichlet_strong") {
        return BCTag::dirichlet_strong;
    }
    if (name == "dirichlet_weak") {
        return BCTag::dirichlet_weak;
    }
    if (name == "neumann") {
        return BCTag::neumann;
    }
    throw InvalidArgument("unknown boundary tag '" + name + "'");
}

void TrimmedDomain::validate() const
{
    if (trimmed() && !map.is_affine()) {
        throw GeometryFault("trimming requires an identity or affine geometry map");
    }
    const bool any_dirichlet = trimmed() || std::any_of(faces.begin(), faces.end(), [](BCTag t) {
                                               return t != BCTag::neumann;
                                           });
    if (!any_dirichlet) {
        throw InvalidArgument("the Dirichlet boundary must be nonempty");
    }
    for (const auto& p : primitives) {
        if (const auto* hp = std::get_if<HalfPlane>(&p)) {
            if (std::abs(hp->normal.norm() - 1.0) > 1e-14) {
                throw GeometryFault("half-plane normal must have unit length");
            }
        } else if (const auto* d = std::get_if<Disk>(&p)) {
            if (!(d->radius > 0.0)) {
                throw GeometryFault("disk radius must be positive");
            }
        }
    }
}

Region region_inside(const TrimmedDomain& domain, const Vec2& x)
{
    if (domain.map.is_affine()) {
        if (!domain.patch_box().contains(x, 1e-14)) {
            return Region::outside;
        }
    }
    for (const auto& p : domain.primitives) {
        if (primitive_level(p, x) < 1e-14) {
            return Region::removed;
        }
    }
    return Region::inside;
}

Vec2 BoundaryArc::point(double t) const
{
    if (kind == Kind::segment) {
        return p0 + t * (p1 - p0);
    }
    const double th = theta0 + t * (theta1 - theta0);
    return center + radius * Vec2(std::cos(th), std::sin(th));
}

Vec2 BoundaryArc::normal(double t) const
{
    if (kind == Kind::segment) {
        return segment_normal;
    }
    // Disks are removed: the outward normal of the domain points to the center.
    const double th = theta0 + t * (theta1 - theta0);
    return -Vec2(std::cos(th), std::sin(th));
}

double BoundaryArc::speed() const
{
    if (kind == Kind::segment) {
        return (p1 - p0).norm();
    }
    return radius * std::abs(theta1 - theta0);
}

namespace {

Box intersect(const Box& a, const Box& b)
{
    return Box{a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)};
}

// Clip p + t d, t in [t0, t1], to the box (Liang-Barsky).
bool clip_line(const Vec2& p, const Vec2& d, const Box& B, double& t0, double& t1)
{
    for (int a = 0; a < 2; ++a) {
        if (d(a) == 0.0) {
            if (p(a) < B.lo(a) || p(a) > B.hi(a)) {
                return false;
            }
            continue;
        }
        double ta = (B.lo(a) - p(a)) / d(a);
        double tb = (B.hi(a) - p(a)) / d(a);
        if (ta > tb) {
            std::swap(ta, tb);
        }
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t1 > t0;
}

// A trimming segment lying on an edge of K is kept only by the element on the domain side.
bool keep_segment(const BoundaryArc& s, const Box& K)
{
    const double tol = 1e-14 * K.diameter();
    for (int a = 0; a < 2; ++a) {
        for (double e : {K.lo(a), K.hi(a)}) {
            if (std::abs(s.p0(a) - e) <= tol && std::abs(s.p1(a) - e) <= tol) {
                const double inward = 0.5 * (K.lo(a) + K.hi(a)) - e;
                return -s.segment_normal(a) * inward > 0.0;
            }
        }
    }
    return true;
}

void push_segment(std::vector<BoundaryArc>& out, const Vec2& a, const Vec2& b, const Vec2& normal,
                  BCTag tag, int face, const Box& K)
{
    BoundaryArc s;
    s.kind = BoundaryArc::Kind::segment;
    s.p0 = a;
    s.p1 = b;
    s.segment_normal = normal;
    s.tag = tag;
    s.face = face;
    if (s.speed() <= 1e-14 * K.diameter()) {
        return;
    }
    if (face < 0 && !keep_segment(s, K)) {
        return;
    }
    out.push_back(s);
}

void disk_arcs(const Disk& d, const Box& B, std::vector<BoundaryArc>& out)
{
    const double r = d.radius;
    const Vec2& c = d.center;
    std::vector<double> angles;
    for (int a = 0; a < 2; ++a) {
        for (double line : {B.lo(a), B.hi(a)}) {
            const double off = line - c(a);
            const double disc = r * r - off * off;
            if (disc <= kGrazeTol) {
                continue;
            }
            const double q = std::sqrt(disc);
            for (double t : {-q, q}) {
                Vec2 p;
                p(a) = line;
                p(1 - a) = c(1 - a) + t;
                const int o = 1 - a;
                if (p(o) < B.lo(o) || p(o) > B.hi(o)) {
                    continue;
                }
                double th = std::atan2(p.y() - c.y(), p.x() - c.x());
                if (th < 0.0) {
                    th += 2.0 * std::numbers::pi;
                }
                angles.push_back(th);
            }
        }
    }
    std::sort(angles.begin(), angles.end());
    const auto on_circle = [&](double th) -> Vec2 { return c + r * Vec2(std::cos(th), std::sin(th)); };
    const auto make = [&](double t0, double t1) {
        BoundaryArc arc;
        arc.kind = BoundaryArc::Kind::arc;
        arc.center = c;
        arc.radius = r;
        arc.theta0 = t0;
        arc.theta1 = t1;
        arc.p0 = on_circle(t0);
        arc.p1 = on_circle(t1);
        arc.tag = BCTag::dirichlet_weak;
        out.push_back(arc);
    };
    if (angles.empty()) {
        if (B.contains(on_circle(0.0), 1e-12) && B.contains(on_circle(std::numbers::pi), 1e-12)) {
            make(0.0, 2.0 * std::numbers::pi);
        }
        return;
    }
    const std::size_t n = angles.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = angles[i];
        const double t1 = (i + 1 < n) ? angles[i + 1] : angles[0] + 2.0 * std::numbers::pi;
        if (t1 - t0 <= 1e-14) {
            continue;
        }
        if (B.contains(on_circle(0.5 * (t0 + t1)), 1e-12)) {
            make(t0, t1);
        }
    }
}

} // namespace

std::vector<BoundaryArc> trimming_arcs_in_box(const TrimmedDomain& domain, const Box& K)
{
    if (!domain.map.is_affine()) {
        throw GeometryFault("boundary arcs require an identity or affine geometry map");
    }
    const Box B = intersect(K, domain.patch_box());
    std::vector<BoundaryArc> out;
    if (!(B.hi.x() >= B.lo.x() && B.hi.y() >= B.lo.y())) {
        return out;
    }
    for (const auto& p : domain.primitives) {
        if (const auto* hp = std::get_if<HalfPlane>(&p)) {
            const Vec2 base = hp->offset * hp->normal;
            const Vec2 dir(-hp->normal.y(), hp->normal.x());
            double t0 = -kInf;
            double t1 = kInf;
            if (clip_line(base, dir, B, t0, t1)) {
                push_segment(out, base + t0 * dir, base + t1 * dir, -hp->normal, BCTag::dirichlet_weak, -1, K);
            }
        } else if (const auto* poly = std::get_if<ConvexPolygon>(&p)) {
            const std::size_t n = poly->vertices.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2& a = poly->vertices[i];
                const Vec2 dir = poly->vertices[(i + 1) % n] - a;
                double t0 = 0.0;
                double t1 = 1.0;
                if (clip_line(a, dir, B, t0, t1)) {
                    push_segment(out, a + t0 * dir, a + t1 * dir, -poly->outward_normals[i],
                                 BCTag::dirichlet_weak, -1, K);
                }
            }
        } else {
            disk_arcs(std::get<Disk>(p), B, out);
        }
    }
    return out;
}

std::vector<BoundaryArc> boundary_arcs_in_element(const TrimmedDomain& domain, const Box& K)
{
    std::vector<BoundaryArc> out = trimming_arcs_in_box(domain, K);
    const Box P = domain.patch_box();
    const double tol = 1e-12 * std::max(1.0, P.diameter());
    const std::array<Vec2, 4> normals{Vec2(-1, 0), Vec2(1, 0), Vec2(0, -1), Vec2(0, 1)};
    for (int f = 0; f < 4; ++f) {
        const int axis = f / 2;            // coordinate fixed on the face
        const int o = 1 - axis;            // coordinate running along the face
        const double s = (f % 2 == 0) ? P.lo(axis) : P.hi(axis);
        const double ks = (f % 2 == 0) ? K.lo(axis) : K.hi(axis);
        if (std::abs(ks - s) > tol) {
            continue;
        }
        // Subtract the closed removed regions from the edge of K on this face.
        std::vector<std::array<double, 2>> keep{{K.lo(o), K.hi(o)}};
        for (const auto& p : domain.primitives) {
            const auto iv = slice_with_tol(p, axis, s, 1e-14);
            if (!iv) {
                continue;
            }
            std::vector<std::array<double, 2>> next;
            for (const auto& seg : keep) {
                if ((*iv)[0] > seg[0]) {
                    next.push_back({seg[0], std::min(seg[1], (*iv)[0])});
                }
                if ((*iv)[1] < seg[1]) {
                    next.push_back({std::max(seg[0], (*iv)[1]), seg[1]});
                }
            }
            keep.clear();
            for (const auto& seg : next) {
                if (seg[1] > seg[0]) {
                    keep.push_back(seg);
                }
            }
        }
        for (const auto& seg : keep) {
            Vec2 a;
            Vec2 b;
            a(axis) = s;
            b(axis) = s;
            a(o) = seg[0];
            b(o) = seg[1];
            push_segment(out, a, b, normals[static_cast<std::size_t>(f)],
                         domain.faces[static_cast<std::size_t>(f)], f, K);
        }
    }
    return out;
}

} // namespace trimstokes
