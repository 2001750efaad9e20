#include "trimstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trimstokes {

std::vector<Index> TrimmedMesh::active() const
{
    std::vector<Index> out;
    for (Index e = 0; e < size(); ++e) {
        if (element(e).active()) {
            out.push_back(e);
        }
    }
    return out;
}

std::vector<Index> TrimmedMesh::bad() const
{
    std::vector<Index> out;
    for (Index e = 0; e < size(); ++e) {
        if (element(e).active() && !element(e).good) {
            out.push_back(e);
        }
    }
    return out;
}

Index TrimmedMesh::count(ElementStatus s) const
{
    return std::count_if(elements_.begin(), elements_.end(), [s](const MeshElement& m) { return m.status == s; });
}

double TrimmedMesh::h() const
{
    double h = 0.0;
    for (const auto& m : elements_) {
        if (m.active()) {
            h = std::max(h, m.h);
        }
    }
    return h;
}

double TrimmedMesh::area() const
{
    double a = 0.0;
    for (const auto& m : elements_) {
        if (m.active()) {
            a += m.volume.measure();
        }
    }
    return a;
}

namespace {

void check_breaks(const std::vector<double>& z)
{
    if (z.size() < 2 || z.front() != 0.0 || z.back() != 1.0) {
        throw InvalidArgument("breakpoints must run from 0 to 1");
    }
    for (std::size_t i = 1; i < z.size(); ++i) {
        if (!(z[i] > z[i - 1])) {
            throw InvalidArgument("breakpoints must be strictly increasing");
        }
    }
}

// Tensor rules pulled through a curved (untrimmed) map.
void spline_rules(const TrimmedDomain& domain, MeshElement& el, int n)
{
    const GeometryMap& F = domain.map;
    const GaussRule g = gauss_legendre(n);
    const Vec2 c = el.param.center();
    const Vec2 e = 0.5 * el.param.extent();
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 z(c.x() + e.x() * g.x[static_cast<std::size_t>(i)], c.y() + e.y() * g.x[static_cast<std::size_t>(j)]);
            const MapPoint mp = F.eval(z, 1);
            el.volume.points.push_back(mp.x);
            el.volume.params.push_back(z);
            el.volume.weights.push_back(e.x() * e.y() * g.w[static_cast<std::size_t>(i)] *
                                        g.w[static_cast<std::size_t>(j)] * mp.det);
        }
    }
    const std::array<Vec2, 4> nhat{Vec2(-1, 0), Vec2(1, 0), Vec2(0, -1), Vec2(0, 1)};
    for (int f = 0; f < 4; ++f) {
        const int axis = f / 2;
        const int o = 1 - axis;
        const double s = (f % 2 == 0) ? 0.0 : 1.0;
        const double ks = (f % 2 == 0) ? el.param.lo(axis) : el.param.hi(axis);
        if (ks != s) {
            continue;
        }
        BoundaryRule br;
        br.h = el.h;
        br.tag = domain.faces[static_cast<std::size_t>(f)];
        br.face = f;
        for (int q = 0; q < n; ++q) {
            Vec2 z;
            z(axis) = s;
            z(o) = c(o) + e(o) * g.x[static_cast<std::size_t>(q)];
            const MapPoint mp = F.eval(z, 1);
            Vec2 tangent = Vec2::Zero();
            tangent(o) = 1.0;
            const Vec2 nn = mp.DF.inverse().transpose() * nhat[static_cast<std::size_t>(f)];
            br.points.push_back(mp.x);
            br.params.push_back(z);
            br.normals.push_back(nn.normalized());
            br.weights.push_back(e(o) * g.w[static_cast<std::size_t>(q)] * (mp.DF * tangent).norm());
        }
        el.boundary.push_back(std::move(br));
    }
}

} // namespace

TrimmedMesh build_mesh(const TrimmedDomain& domain, const std::vector<double>& breaks_x,
                       const std::vector<double>& breaks_y, const MeshOptions& options)
{
    domain.validate();
    check_breaks(breaks_x);
    check_breaks(breaks_y);
    TrimmedMesh mesh;
    mesh.domain_ = domain;
    mesh.breaks_ = {breaks_x, breaks_y};
    mesh.nx_ = static_cast<Index>(breaks_x.size()) - 1;
    mesh.ny_ = static_cast<Index>(breaks_y.size()) - 1;
    mesh.quad_order_ = options.quad_order;
    mesh.elements_.resize(static_cast<std::size_t>(mesh.nx_ * mesh.ny_));
    const GeometryMap& F = domain.map;

    for (Index iy = 0; iy < mesh.ny_; ++iy) {
        for (Index ix = 0; ix < mesh.nx_; ++ix) {
            const Index id = mesh.index(ix, iy);
            MeshElement& el = mesh.elements_[static_cast<std::size_t>(id)];
            el.ix = ix;
            el.iy = iy;
            el.param = Box{Vec2(breaks_x[static_cast<std::size_t>(ix)], breaks_y[static_cast<std::size_t>(iy)]),
                           Vec2(breaks_x[static_cast<std::size_t>(ix + 1)], breaks_y[static_cast<std::size_t>(iy + 1)])};
            el.phys = F.image_of(el.param);
            el.good = true;

            if (!F.is_affine()) {
                // Untrimmed curved patch: every element is interior.
                const std::array<Vec2, 4> corners{F.eval(el.param.lo, 0).x, F.eval(el.param.hi, 0).x,
                                                  F.eval(Vec2(el.param.lo.x(), el.param.hi.y()), 0).x,
                                                  F.eval(Vec2(el.param.hi.x(), el.param.lo.y()), 0).x};
                el.h = std::max((corners[0] - corners[1]).norm(), (corners[2] - corners[3]).norm());
                if (options.mesh_size == MeshSize::edge) {
                    el.h = 0.0;
                    for (int a = 0; a < 4; ++a) {
                        for (int b = a + 1; b < 4; ++b) {
                            if (!((a == 0 && b == 1) || (a == 2 && b == 3))) {
                                el.h = std::max(el.h, (corners[static_cast<std::size_t>(a)] - corners[static_cast<std::size_t>(b)]).norm());
                            }
                        }
                    }
                }
                el.status = ElementStatus::interior;
                el.fraction = 1.0;
                spline_rules(domain, el, options.quad_order);
                continue;
            }

            el.h = options.mesh_size == MeshSize::diameter ? el.phys.diameter() : el.phys.extent().maxCoeff();
            const bool crossed = trimming_crosses_interior(domain, el.phys);
            el.volume = cut_volume_rule(el.phys, domain, options.quad_order);
            const double area = el.phys.area();
            el.fraction = std::min(1.0, el.volume.measure() / area);
            if (!crossed) {
                el.status = el.volume.size() > 0 ? ElementStatus::interior : ElementStatus::exterior;
                if (el.status == ElementStatus::interior) {
                    el.fraction = 1.0;
                }
            } else {
                el.status = el.fraction > options.demote_fraction ? ElementStatus::cut : ElementStatus::exterior;
            }
            if (!el.active()) {
                el.volume = VolumeRule{};
                el.fraction = 0.0;
                el.good = false;
                continue;
            }
            el.volume.element = id;
            for (const Vec2& x : el.volume.points) {
                el.volume.params.push_back(F.inverse(x));
            }
            for (BoundaryRule& br : cut_boundary_rule(el.phys, domain, options.quad_order, el.h)) {
                br.element = id;
                for (const Vec2& x : br.points) {
                    br.params.push_back(F.inverse(x));
                }
                el.boundary.push_back(std::move(br));
            }
        }
    }
    for (auto& el : mesh.elements_) {
        for (auto& br : el.boundary) {
            br.element = mesh.index(el.ix, el.iy);
        }
        el.volume.element = mesh.index(el.ix, el.iy);
    }
    return mesh;
}

Index good_neighbor(const TrimmedMesh& mesh, Index K)
{
    const MeshElement& el = mesh.element(K);
    const Vec2 c = el.phys.center();
    for (Index ring = 1; ring <= 3; ++ring) {
        Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index dy = -ring; dy <= ring; ++dy) {
            for (Index dx = -ring; dx <= ring; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) {
                    continue;
                }
                const Index jx = el.ix + dx;
                const Index jy = el.iy + dy;
                if (jx < 0 || jy < 0 || jx >= mesh.nx() || jy >= mesh.ny()) {
                    continue;
                }
                const Index cand = mesh.index(jx, jy);
                if (mesh.element(cand).status != ElementStatus::interior) {
                    continue;
                }
                const double d = (mesh.element(cand).phys.center() - c).norm();
                if (d < best_d || (d == best_d && cand < best)) {
                    best = cand;
                    best_d = d;
                }
            }
        }
        if (best >= 0) {
            return best;
        }
    }
    throw MeshFault("mesh too coarse for stabilization: no interior element within three rings of element " +
                    std::to_string(K));
}

void classify_good_bad(TrimmedMesh& mesh, double theta)
{
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw InvalidArgument("theta must lie in (0, 1]");
    }
    mesh.theta_ = theta;
    for (auto& el : mesh.elements_) {
        el.neighbor = -1;
        if (!el.active()) {
            el.good = false;
            continue;
        }
        el.good = el.status == ElementStatus::interior || (theta < 1.0 && el.fraction >= theta);
    }
    for (Index e = 0; e < mesh.size(); ++e) {
        MeshElement& el = mesh.element(e);
        if (el.active() && !el.good) {
            el.neighbor = good_neighbor(mesh, e);
        }
    }
}

} // namespace trimstokes
