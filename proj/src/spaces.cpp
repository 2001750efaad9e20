#include "trimstokes/spaces.hpp"

#include <algorithm>
#include <limits>

namespace trimstokes {

std::string to_string(ElementKind kind)
{
    switch (kind) {
    case ElementKind::RT:
        return "RT";
    case ElementKind::N:
        return "N";
    case ElementKind::TH:
        return "TH";
    }
    return "?";
}

ElementKind element_kind_from_string(const std::string& name)
{
    if (name == "RT") {
        return ElementKind::RT;
    }
    if (name == "N") {
        return ElementKind::N;
    }
    if (name == "TH") {
        return ElementKind::TH;
    }
    throw InvalidArgument("unknown element kind '" + name + "' (expected RT, N or TH)");
}

namespace {

KnotVector knots(int degree, int alpha, const std::vector<double>& z)
{
    return make_open_knot_vector(degree, alpha, z);
}

// Local-to-global map of one tensor space on element (ix, iy).
void append_dofs(const TensorSplineSpace& S, Index ix, Index iy, Index offset, std::vector<Index>& out)
{
    const Index fx = S.dir(0).first_on_element(ix);
    const Index fy = S.dir(1).first_on_element(iy);
    const int px = S.dir(0).degree();
    const int py = S.dir(1).degree();
    for (int b = 0; b <= py; ++b) {
        for (int a = 0; a <= px; ++a) {
            out.push_back(offset + S.index(fx + a, fy + b));
        }
    }
}

struct TensorEval {
    Eigen::MatrixXd val;  // points x local
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy;
};

TensorEval eval_tensor(const TensorSplineSpace& S, Index ix, Index iy, const std::vector<Vec2>& params, bool grads)
{
    const int px = S.dir(0).degree();
    const int py = S.dir(1).degree();
    const Index nq = static_cast<Index>(params.size());
    const Index nl = (px + 1) * (py + 1);
    TensorEval t;
    t.val.resize(nq, nl);
    if (grads) {
        t.dx.resize(nq, nl);
        t.dy.resize(nq, nl);
    }
    const int nd = grads ? 1 : 0;
    for (Index q = 0; q < nq; ++q) {
        const BasisValues bx = S.dir(0).eval_on_element(ix, params[static_cast<std::size_t>(q)].x(), nd);
        const BasisValues by = S.dir(1).eval_on_element(iy, params[static_cast<std::size_t>(q)].y(), nd);
        for (int b = 0; b <= py; ++b) {
            for (int a = 0; a <= px; ++a) {
                const Index j = a + (px + 1) * b;
                t.val(q, j) = bx.ders(0, a) * by.ders(0, b);
                if (grads) {
                    t.dx(q, j) = bx.ders(1, a) * by.ders(0, b);
                    t.dy(q, j) = bx.ders(0, a) * by.ders(1, b);
                }
            }
        }
    }
    return t;
}

// Parametric intervals (along the face) of the active part of a fitted face.
std::vector<std::array<double, 2>> active_face_intervals(const TrimmedMesh& mesh, int face)
{
    const int axis = face / 2;
    const int o = 1 - axis;
    const TrimmedDomain& dom = mesh.domain();
    std::vector<std::array<double, 2>> out;
    for (const MeshElement& el : mesh.elements()) {
        if (!el.active()) {
            continue;
        }
        const double s = (face % 2 == 0) ? 0.0 : 1.0;
        const double es = (face % 2 == 0) ? el.param.lo(axis) : el.param.hi(axis);
        if (es != s) {
            continue;
        }
        if (!dom.map.is_affine()) {
            out.push_back({el.param.lo(o), el.param.hi(o)});
            continue;
        }
        for (const BoundaryArc& a : boundary_arcs_in_element(dom, el.phys)) {
            if (a.face != face) {
                continue;
            }
            const double t0 = dom.map.inverse(a.p0)(o);
            const double t1 = dom.map.inverse(a.p1)(o);
            out.push_back({std::min(t0, t1), std::max(t0, t1)});
        }
    }
    return out;
}

} // namespace

std::vector<Index> StokesSpaces::element_velocity_dofs(const MeshElement& el) const
{
    std::vector<Index> out;
    append_dofs(vel_[0], el.ix, el.iy, 0, out);
    append_dofs(vel_[1], el.ix, el.iy, vel_[0].size(), out);
    return out;
}

std::vector<Index> StokesSpaces::element_pressure_dofs(const MeshElement& el) const
{
    std::vector<Index> out;
    append_dofs(pres_, el.ix, el.iy, 0, out);
    return out;
}

VelocityValues StokesSpaces::eval_velocity(const TrimmedMesh& mesh, const MeshElement& el,
                                           const std::vector<Vec2>& params, bool gradients) const
{
    VelocityValues v;
    v.dofs = element_velocity_dofs(el);
    const Index nq = static_cast<Index>(params.size());
    const Index nl = static_cast<Index>(v.dofs.size());
    for (int c = 0; c < 2; ++c) {
        v.val[static_cast<std::size_t>(c)] = Eigen::MatrixXd::Zero(nq, nl);
        if (gradients) {
            for (int d = 0; d < 2; ++d) {
                v.grad[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] = Eigen::MatrixXd::Zero(nq, nl);
            }
        }
    }
    const GeometryMap& F = mesh.domain().map;
    const bool curved = !F.is_affine();
    std::vector<MapPoint> geo;
    geo.reserve(params.size());
    for (const Vec2& z : params) {
        geo.push_back(F.eval(z, (curved && piola() && gradients) ? 2 : 1));
    }
    Index col0 = 0;
    for (int c = 0; c < 2; ++c) {
        const TensorEval t = eval_tensor(vel_[static_cast<std::size_t>(c)], el.ix, el.iy, params, gradients);
        const Index nc = t.val.cols();
        for (Index q = 0; q < nq; ++q) {
            const MapPoint& mp = geo[static_cast<std::size_t>(q)];
            const Mat2 DFinv = mp.DF.inverse();
            for (Index j = 0; j < nc; ++j) {
                const Index col = col0 + j;
                if (!piola()) {
                    v.val[static_cast<std::size_t>(c)](q, col) = t.val(q, j);
                    if (gradients) {
                        const Eigen::RowVector2d gz(t.dx(q, j), t.dy(q, j));
                        const Eigen::RowVector2d gx = gz * DFinv;
                        v.grad[static_cast<std::size_t>(c)][0](q, col) = gx(0);
                        v.grad[static_cast<std::size_t>(c)][1](q, col) = gx(1);
                    }
                    continue;
                }
                Vec2 vhat = Vec2::Zero();
                vhat(c) = t.val(q, j);
                Mat2 ghat = Mat2::Zero();
                if (gradients) {
                    ghat(c, 0) = t.dx(q, j);
                    ghat(c, 1) = t.dy(q, j);
                }
                const PiolaResult r = curved && gradients ? piola_transform(mp.DF, mp.det, vhat, ghat, mp.d2F)
                                                          : piola_transform(mp.DF, mp.det, vhat, ghat);
                for (int a = 0; a < 2; ++a) {
                    v.val[static_cast<std::size_t>(a)](q, col) = r.v(a);
                    if (gradients) {
                        for (int d = 0; d < 2; ++d) {
                            v.grad[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)](q, col) = r.Dv(a, d);
                        }
                    }
                }
            }
        }
        col0 += nc;
    }
    return v;
}

ScalarValues StokesSpaces::eval_pressure(const MeshElement& el, const std::vector<Vec2>& params) const
{
    ScalarValues s;
    s.dofs = element_pressure_dofs(el);
    s.val = eval_tensor(pres_, el.ix, el.iy, params, false).val;
    return s;
}

void StokesSpaces::set_dirichlet_data(const TrimmedMesh& mesh, const VectorField& u_D)
{
    std::fill(constrained_value_.begin(), constrained_value_.end(), std::numeric_limits<double>::quiet_NaN());
    const GeometryMap& F = mesh.domain().map;
    const int nquad = std::max(mesh.quad_order(), k_ + 3);
    const GaussRule g = gauss_legendre(nquad);
    std::vector<Index> pos(static_cast<std::size_t>(velocity_size()), -1);

    for (const FaceChannel& ch : channels_) {
        const int axis = ch.face / 2;
        const int o = 1 - axis;
        const double s = (ch.face % 2 == 0) ? 0.0 : 1.0;
        const Index n = static_cast<Index>(ch.dofs.size());
        for (Index i = 0; i < n; ++i) {
            pos[static_cast<std::size_t>(ch.dofs[static_cast<std::size_t>(i)])] = i;
        }
        // L2 projection on the active part of the face only: DOFs outside the
        // channel may have a nonzero trace on the removed part.
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        const Index ne = (o == 0) ? mesh.nx() : mesh.ny();
        const Index fixed = (s == 0.0) ? 0 : ((axis == 0) ? mesh.nx() - 1 : mesh.ny() - 1);
        for (Index e = 0; e < ne; ++e) {
            const MeshElement& el = (o == 0) ? mesh.element(mesh.index(e, fixed)) : mesh.element(mesh.index(fixed, e));
            for (const auto& iv : ch.intervals) {
                const double a0 = std::max(iv[0], el.param.lo(o));
                const double a1 = std::min(iv[1], el.param.hi(o));
                if (a1 <= a0) {
                    continue;
                }
                std::vector<Vec2> params;
                std::vector<double> wts;
                std::vector<Vec2> normals;
                std::vector<Vec2> points;
                const double c0 = 0.5 * (a0 + a1);
                const double e0 = 0.5 * (a1 - a0);
                for (int q = 0; q < nquad; ++q) {
                    Vec2 z;
                    z(axis) = s;
                    z(o) = c0 + e0 * g.x[static_cast<std::size_t>(q)];
                    const MapPoint mp = F.eval(z, 1);
                    Vec2 tangent = Vec2::Zero();
                    tangent(o) = 1.0;
                    Vec2 nhat = Vec2::Zero();
                    nhat(axis) = (s == 0.0) ? -1.0 : 1.0;
                    params.push_back(z);
                    points.push_back(mp.x);
                    normals.push_back((mp.DF.inverse().transpose() * nhat).normalized());
                    wts.push_back(e0 * g.w[static_cast<std::size_t>(q)] * (mp.DF * tangent).norm());
                }
                const VelocityValues vv = eval_velocity(mesh, el, params, false);
                for (int q = 0; q < nquad; ++q) {
                    const Vec2 dir = ch.direction < 0 ? normals[static_cast<std::size_t>(q)]
                                                      : Vec2::Unit(ch.direction);
                    const double data = u_D(points[static_cast<std::size_t>(q)]).dot(dir);
                    std::vector<std::pair<Index, double>> phi;
                    for (Index j = 0; j < vv.size(); ++j) {
                        const Index p = pos[static_cast<std::size_t>(vv.dofs[static_cast<std::size_t>(j)])];
                        if (p >= 0) {
                            phi.emplace_back(p, vv.value(q, j).dot(dir));
                        }
                    }
                    const double w = wts[static_cast<std::size_t>(q)];
                    for (const auto& [pi, vi] : phi) {
                        b(pi) += w * data * vi;
                        for (const auto& [pj, vj] : phi) {
                            M(pi, pj) += w * vi * vj;
                        }
                    }
                }
            }
        }
        // DOFs already fixed by an earlier face (corners) are known.
        std::vector<Index> unknown;
        Eigen::VectorXd known = Eigen::VectorXd::Zero(n);
        for (Index i = 0; i < n; ++i) {
            const Index dof = ch.dofs[static_cast<std::size_t>(i)];
            if (is_constrained(dof)) {
                known(i) = constrained_value(dof);
            } else {
                unknown.push_back(i);
            }
        }
        const Eigen::VectorXd rhs = b - M * known;
        const Index nu = static_cast<Index>(unknown.size());
        Eigen::MatrixXd Mu(nu, nu);
        Eigen::VectorXd bu(nu);
        for (Index i = 0; i < nu; ++i) {
            bu(i) = rhs(unknown[static_cast<std::size_t>(i)]);
            for (Index j = 0; j < nu; ++j) {
                Mu(i, j) = M(unknown[static_cast<std::size_t>(i)], unknown[static_cast<std::size_t>(j)]);
            }
        }
        const Eigen::VectorXd x = Mu.ldlt().solve(bu);
        for (Index i = 0; i < nu; ++i) {
            constrained_value_[static_cast<std::size_t>(ch.dofs[static_cast<std::size_t>(unknown[static_cast<std::size_t>(i)])])] = x(i);
        }
        for (Index dof : ch.dofs) {
            pos[static_cast<std::size_t>(dof)] = -1;
        }
    }
    constrained_values_.clear();
    for (Index dof : constrained_) {
        constrained_values_.push_back(constrained_value(dof));
    }
}

StokesSpaces build_spaces(const ElementSpec& spec, const TrimmedMesh& mesh, bool prune_pressure,
                          const VectorField& u_D)
{
    if (spec.k < 1) {
        throw InvalidArgument("element degree k must be >= 1");
    }
    const int k = spec.k;
    const int alpha = spec.alpha < 0 ? k - 1 : spec.alpha;
    if (alpha > k - 1) {
        throw InvalidArgument("regularity alpha must satisfy 0 <= alpha <= k-1");
    }
    StokesSpaces sp;
    sp.kind_ = spec.kind;
    sp.k_ = k;
    sp.alpha_ = alpha;
    const auto& zx = mesh.breakpoints(0);
    const auto& zy = mesh.breakpoints(1);
    switch (spec.kind) {
    case ElementKind::RT:
        sp.vel_[0] = TensorSplineSpace(knots(k + 1, alpha + 1, zx), knots(k, alpha, zy));
        sp.vel_[1] = TensorSplineSpace(knots(k, alpha, zx), knots(k + 1, alpha + 1, zy));
        break;
    case ElementKind::N:
        sp.vel_[0] = TensorSplineSpace(knots(k + 1, alpha + 1, zx), knots(k + 1, alpha, zy));
        sp.vel_[1] = TensorSplineSpace(knots(k + 1, alpha, zx), knots(k + 1, alpha + 1, zy));
        break;
    case ElementKind::TH:
        sp.vel_[0] = TensorSplineSpace(knots(k + 1, alpha, zx), knots(k + 1, alpha, zy));
        sp.vel_[1] = sp.vel_[0];
        break;
    }
    sp.pres_ = TensorSplineSpace(knots(k, alpha, zx), knots(k, alpha, zy));

    const Index nv = sp.velocity_size();
    const Index np = sp.pressure_size();
    sp.vel_active_.assign(static_cast<std::size_t>(nv), 0);
    sp.pres_active_.assign(static_cast<std::size_t>(np), 0);
    std::vector<char> pres_good(static_cast<std::size_t>(np), 0);
    for (const MeshElement& el : mesh.elements()) {
        if (!el.active()) {
            continue;
        }
        for (Index d : sp.element_velocity_dofs(el)) {
            sp.vel_active_[static_cast<std::size_t>(d)] = 1;
        }
        for (Index d : sp.element_pressure_dofs(el)) {
            sp.pres_active_[static_cast<std::size_t>(d)] = 1;
            if (el.good) {
                pres_good[static_cast<std::size_t>(d)] = 1;
            }
        }
    }

    // Strong Dirichlet channels.
    sp.constrained_value_.assign(static_cast<std::size_t>(nv), std::numeric_limits<double>::quiet_NaN());
    std::vector<char> is_strong(static_cast<std::size_t>(nv), 0);
    const double min_gap = std::min(zx[1] - zx[0], zy[1] - zy[0]) * 1e-10;
    for (int f = 0; f < 4; ++f) {
        if (mesh.domain().faces[static_cast<std::size_t>(f)] != BCTag::dirichlet_strong) {
            continue;
        }
        const int axis = f / 2;
        const int o = 1 - axis;
        const auto intervals = active_face_intervals(mesh, f);
        const std::vector<int> comps = sp.piola() ? std::vector<int>{axis} : std::vector<int>{0, 1};
        for (int c : comps) {
            const TensorSplineSpace& S = sp.vel_[static_cast<std::size_t>(c)];
            const Index i_face = (f % 2 == 0) ? 0 : S.size(axis) - 1;
            StokesSpaces::FaceChannel ch;
            ch.face = f;
            ch.direction = sp.piola() ? -1 : c;
            ch.intervals = intervals;
            for (Index t = 0; t < S.size(o); ++t) {
                const KnotVector& kv = S.dir(o);
                const double a = kv.knots()[static_cast<std::size_t>(t)];
                const double b = kv.knots()[static_cast<std::size_t>(t + kv.degree() + 1)];
                double overlap = 0.0;
                for (const auto& iv : intervals) {
                    overlap += std::max(0.0, std::min(b, iv[1]) - std::max(a, iv[0]));
                }
                if (overlap <= min_gap) {
                    continue;
                }
                const Index local = (axis == 0) ? S.index(i_face, t) : S.index(t, i_face);
                const Index dof = sp.velocity_offset(c) + local;
                ch.dofs.push_back(dof);
                is_strong[static_cast<std::size_t>(dof)] = 1;
            }
            if (!ch.dofs.empty()) {
                sp.channels_.push_back(std::move(ch));
            }
        }
    }
    for (Index d = 0; d < nv; ++d) {
        if (is_strong[static_cast<std::size_t>(d)] && sp.vel_active_[static_cast<std::size_t>(d)]) {
            sp.constrained_.push_back(d);
        }
    }
    sp.set_dirichlet_data(mesh, u_D ? u_D : VectorField([](const Vec2&) { return Vec2(0, 0); }));

    sp.vel_unknown_.assign(static_cast<std::size_t>(nv), -1);
    for (Index d = 0; d < nv; ++d) {
        if (sp.vel_active_[static_cast<std::size_t>(d)] && !is_strong[static_cast<std::size_t>(d)]) {
            sp.vel_unknown_[static_cast<std::size_t>(d)] = sp.n_vel_unknowns_++;
        }
    }
    sp.pruned_ = prune_pressure;
    sp.pres_unknown_.assign(static_cast<std::size_t>(np), -1);
    for (Index d = 0; d < np; ++d) {
        const bool keep = prune_pressure ? pres_good[static_cast<std::size_t>(d)] : sp.pres_active_[static_cast<std::size_t>(d)];
        if (keep) {
            sp.pres_unknown_[static_cast<std::size_t>(d)] = sp.n_pres_unknowns_++;
        }
    }
    return sp;
}

Eigen::MatrixXd velocity_field(const VelocityValues& vals, const Eigen::VectorXd& coeffs)
{
    const Index nq = vals.val[0].rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nq, 2);
    for (Index j = 0; j < vals.size(); ++j) {
        const double c = coeffs(vals.dofs[static_cast<std::size_t>(j)]);
        if (c == 0.0) {
            continue;
        }
        out.col(0) += c * vals.val[0].col(j);
        out.col(1) += c * vals.val[1].col(j);
    }
    return out;
}

} // namespace trimstokes
