#include "trimstokes/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace trimstokes {

GaussRule gauss_legendre(int n)
{
    if (n < 1 || n > 30) {
        throw InvalidArgument("Gauss-Legendre order must be in [1, 30]");
    }
    GaussRule g;
    g.x.resize(static_cast<std::size_t>(n));
    g.w.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Recompute the derivative at the converged root.
        double p0 = 1.0;
        double p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.x[static_cast<std::size_t>(i)] = -x;
        g.x[static_cast<std::size_t>(n - 1 - i)] = x;
        g.w[static_cast<std::size_t>(i)] = w;
        g.w[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) {
        g.x[static_cast<std::size_t>(n / 2)] = 0.0;
    }
    return g;
}

double VolumeRule::measure() const
{
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double BoundaryRule::measure() const
{
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

VolumeRule tensor_rule(const Box& K, int n)
{
    const GaussRule g = gauss_legendre(n);
    const Vec2 c = K.center();
    const Vec2 e = 0.5 * K.extent();
    VolumeRule r;
    r.points.reserve(static_cast<std::size_t>(n * n));
    r.weights.reserve(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            r.points.emplace_back(c.x() + e.x() * g.x[static_cast<std::size_t>(i)],
                                  c.y() + e.y() * g.x[static_cast<std::size_t>(j)]);
            r.weights.push_back(e.x() * e.y() * g.w[static_cast<std::size_t>(i)] *
                                g.w[static_cast<std::size_t>(j)]);
        }
    }
    return r;
}

bool trimming_crosses_interior(const TrimmedDomain& domain, const Box& K)
{
    const double tol = 1e-12 * K.diameter();
    for (const BoundaryArc& a : trimming_arcs_in_box(domain, K)) {
        const Vec2 m = a.point(0.5);
        if (m.x() > K.lo.x() + tol && m.x() < K.hi.x() - tol && m.y() > K.lo.y() + tol &&
            m.y() < K.hi.y() - tol) {
            return true;
        }
        // A chord through a corner region may have its midpoint near an edge.
        if (a.kind == BoundaryArc::Kind::segment && a.p0(0) != a.p1(0) && a.p0(1) != a.p1(1)) {
            return true;
        }
    }
    return false;
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr int kMaxPieces = 4;

void add_unique_sorted(std::vector<double>& v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Slice the box along lines {x_axis = s} and integrate along the other coordinate.
void slice_box(const Box& B, const TrimmedDomain& domain, int axis, int n, const GaussRule& g,
               VolumeRule& out)
{
    const int o = 1 - axis;
    std::vector<double> cuts{B.lo(axis), B.hi(axis)};
    for (const BoundaryArc& a : trimming_arcs_in_box(domain, B)) {
        cuts.push_back(a.p0(axis));
        cuts.push_back(a.p1(axis));
    }
    double arc_width = std::numeric_limits<double>::infinity();
    for (const auto& p : domain.primitives) {
        if (const auto* d = std::get_if<Disk>(&p)) {
            const Vec2 nearest = d->center.cwiseMax(B.lo).cwiseMin(B.hi);
            if ((nearest - d->center).norm() < d->radius) {
                cuts.push_back(d->center(axis) - d->radius);
                cuts.push_back(d->center(axis) + d->radius);
                arc_width = std::min(arc_width, d->radius / 8.0);
            }
        } else if (const auto* poly = std::get_if<ConvexPolygon>(&p)) {
            for (const Vec2& v : poly->vertices) {
                cuts.push_back(v(axis));
            }
        }
    }
    for (double& c : cuts) {
        c = std::clamp(c, B.lo(axis), B.hi(axis));
    }
    add_unique_sorted(cuts);

    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a0 = cuts[s];
        const double a1 = cuts[s + 1];
        if (!(a1 > a0)) {
            continue;
        }
        const int nsub = std::isfinite(arc_width) ? std::max(1, static_cast<int>(std::ceil((a1 - a0) / arc_width))) : 1;
        const double ws = (a1 - a0) / nsub;
        for (int q = 0; q < nsub; ++q) {
            const double s0 = a0 + q * ws;
            const double s1 = (q + 1 == nsub) ? a1 : s0 + ws;
            for (int i = 0; i < n; ++i) {
                const double xs = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * g.x[static_cast<std::size_t>(i)];
                const double wsi = 0.5 * (s1 - s0) * g.w[static_cast<std::size_t>(i)];
                std::vector<std::array<double, 2>> pieces{{B.lo(o), B.hi(o)}};
                for (const auto& p : domain.primitives) {
                    const auto iv = slice_removed(p, axis, xs);
                    if (!iv) {
                        continue;
                    }
                    std::vector<std::array<double, 2>> next;
                    for (const auto& seg : pieces) {
                        if ((*iv)[0] > seg[0]) {
                            next.push_back({seg[0], std::min(seg[1], (*iv)[0])});
                        }
                        if ((*iv)[1] < seg[1]) {
                            next.push_back({std::max(seg[0], (*iv)[1]), seg[1]});
                        }
                    }
                    pieces.clear();
                    for (const auto& seg : next) {
                        if (seg[1] > seg[0]) {
                            pieces.push_back(seg);
                        }
                    }
                }
                if (static_cast<int>(pieces.size()) > kMaxPieces) {
                    throw GeometryFault("slicing line meets more than four pieces of the domain");
                }
                for (const auto& seg : pieces) {
                    const double c = 0.5 * (seg[0] + seg[1]);
                    const double e = 0.5 * (seg[1] - seg[0]);
                    for (int j = 0; j < n; ++j) {
                        Vec2 pt;
                        pt(axis) = xs;
                        pt(o) = c + e * g.x[static_cast<std::size_t>(j)];
                        out.points.push_back(pt);
                        out.weights.push_back(wsi * e * g.w[static_cast<std::size_t>(j)]);
                    }
                }
            }
        }
    }
}

} // namespace

VolumeRule cut_volume_rule(const Box& K, const TrimmedDomain& domain, int n)
{
    if (!trimming_crosses_interior(domain, K)) {
        if (region_inside(domain, K.center()) != Region::inside) {
            return VolumeRule{};
        }
        return tensor_rule(K, n);
    }
    // Split at the 45-degree points of every disk touching K so that each circle
    // piece inside a sub-box is a graph with slope <= 1 over the slicing axis.
    std::array<std::vector<double>, 2> splits{std::vector<double>{K.lo.x(), K.hi.x()},
                                              std::vector<double>{K.lo.y(), K.hi.y()}};
    std::vector<const Disk*> disks;
    for (const auto& p : domain.primitives) {
        if (const auto* d = std::get_if<Disk>(&p)) {
            const Vec2 nearest = d->center.cwiseMax(K.lo).cwiseMin(K.hi);
            if ((nearest - d->center).norm() >= d->radius) {
                continue;
            }
            disks.push_back(d);
            for (int a = 0; a < 2; ++a) {
                for (double sgn : {-1.0, 1.0}) {
                    const double c = d->center(a) + sgn * d->radius * kInvSqrt2;
                    if (c > K.lo(a) && c < K.hi(a)) {
                        splits[static_cast<std::size_t>(a)].push_back(c);
                    }
                }
            }
        }
    }
    add_unique_sorted(splits[0]);
    add_unique_sorted(splits[1]);

    const GaussRule g = gauss_legendre(n);
    VolumeRule rule;
    for (std::size_t j = 0; j + 1 < splits[1].size(); ++j) {
        for (std::size_t i = 0; i + 1 < splits[0].size(); ++i) {
            const Box B{Vec2(splits[0][i], splits[1][j]), Vec2(splits[0][i + 1], splits[1][j + 1])};
            // Vertical slicing is fine for a disk if B sits in its vertical band or misses it.
            bool vertical_ok = true;
            bool horizontal_ok = true;
            for (const Disk* d : disks) {
                const Vec2 nearest = d->center.cwiseMax(B.lo).cwiseMin(B.hi);
                if ((nearest - d->center).norm() >= d->radius) {
                    continue;
                }
                const Vec2 farthest(std::abs(B.lo.x() - d->center.x()) > std::abs(B.hi.x() - d->center.x()) ? B.lo.x() : B.hi.x(),
                                    std::abs(B.lo.y() - d->center.y()) > std::abs(B.hi.y() - d->center.y()) ? B.lo.y() : B.hi.y());
                if ((farthest - d->center).norm() <= d->radius) {
                    continue; // B entirely removed by this disk
                }
                const double band = d->radius * kInvSqrt2 * (1.0 + 1e-12);
                vertical_ok = vertical_ok && std::abs(B.lo.x() - d->center.x()) <= band &&
                              std::abs(B.hi.x() - d->center.x()) <= band;
                horizontal_ok = horizontal_ok && std::abs(B.lo.y() - d->center.y()) <= band &&
                                std::abs(B.hi.y() - d->center.y()) <= band;
            }
            if (!vertical_ok && !horizontal_ok) {
                throw GeometryFault("no admissible slicing direction for the disks in this element");
            }
            slice_box(B, domain, vertical_ok ? 0 : 1, n, g, rule);
        }
    }
    return rule;
}

BoundaryRule arc_rule(const BoundaryArc& arc, int n, double h)
{
    const GaussRule g = gauss_legendre(n);
    BoundaryRule r;
    r.h = h;
    r.tag = arc.tag;
    r.face = arc.face;
    r.element = arc.element;
    const double speed = arc.speed();
    for (int i = 0; i < n; ++i) {
        const double t = 0.5 * (1.0 + g.x[static_cast<std::size_t>(i)]);
        r.points.push_back(arc.point(t));
        r.normals.push_back(arc.normal(t));
        r.weights.push_back(0.5 * g.w[static_cast<std::size_t>(i)] * speed);
    }
    return r;
}

std::vector<BoundaryRule> cut_boundary_rule(const Box& K, const TrimmedDomain& domain, int n, double h)
{
    std::vector<BoundaryRule> out;
    for (const BoundaryArc& a : boundary_arcs_in_element(domain, K)) {
        out.push_back(arc_rule(a, n, h));
    }
    return out;
}

} // namespace trimstokes
