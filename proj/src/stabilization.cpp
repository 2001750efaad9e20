#include "trimstokes/stabilization.hpp"

namespace trimstokes {

void legendre(int n, double x, double* val, double* der)
{
    val[0] = 1.0;
    der[0] = 0.0;
    if (n == 0) {
        return;
    }
    val[1] = x;
    der[1] = 1.0;
    for (int j = 1; j < n; ++j) {
        val[j + 1] = ((2 * j + 1) * x * val[j] - j * val[j - 1]) / (j + 1);
        der[j + 1] = der[j - 1] + (2 * j + 1) * val[j];
    }
}

namespace {

// Tensor Legendre values on a box frame: row vectors over l = a + (d0+1) b.
struct LegendreRow {
    Eigen::RowVectorXd val;
    Eigen::RowVectorXd dx;
    Eigen::RowVectorXd dy;
};

LegendreRow legendre_row(const Box& frame, const std::array<int, 2>& deg, const Vec2& z)
{
    const Vec2 ext = frame.extent();
    const double s = 2.0 * (z.x() - frame.lo.x()) / ext.x() - 1.0;
    const double t = 2.0 * (z.y() - frame.lo.y()) / ext.y() - 1.0;
    std::array<double, 32> vs{}, ds{}, vt{}, dt{};
    legendre(deg[0], s, vs.data(), ds.data());
    legendre(deg[1], t, vt.data(), dt.data());
    const int n0 = deg[0] + 1;
    const int n = n0 * (deg[1] + 1);
    LegendreRow r{Eigen::RowVectorXd(n), Eigen::RowVectorXd(n), Eigen::RowVectorXd(n)};
    for (int b = 0; b <= deg[1]; ++b) {
        for (int a = 0; a <= deg[0]; ++a) {
            const int l = a + n0 * b;
            r.val(l) = vs[static_cast<std::size_t>(a)] * vt[static_cast<std::size_t>(b)];
            r.dx(l) = 2.0 / ext.x() * ds[static_cast<std::size_t>(a)] * vt[static_cast<std::size_t>(b)];
            r.dy(l) = 2.0 / ext.y() * vs[static_cast<std::size_t>(a)] * dt[static_cast<std::size_t>(b)];
        }
    }
    return r;
}

// M^{-1} G for the Legendre mass M and cross matrix G = sum w L^T f.
Eigen::MatrixXd project(const Box& frame, const std::array<int, 2>& deg, const std::vector<Vec2>& pts,
                        const std::vector<double>& w, const Eigen::MatrixXd& f)
{
    const Index nl = (deg[0] + 1) * (deg[1] + 1);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nl, nl);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nl, f.cols());
    for (std::size_t q = 0; q < pts.size(); ++q) {
        const LegendreRow r = legendre_row(frame, deg, pts[q]);
        M.noalias() += w[q] * r.val.transpose() * r.val;
        G.noalias() += w[q] * r.val.transpose() * f.row(static_cast<Index>(q));
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    const Eigen::VectorXd d = ldlt.vectorD();
    if (d.minCoeff() <= 1e-12 * d.maxCoeff()) {
        throw SolverFault("singular Legendre mass matrix on the good neighbor");
    }
    return ldlt.solve(G);
}

} // namespace

LocalProjector build_projector(const StokesSpaces& spaces, const TrimmedMesh& mesh, Index K)
{
    const MeshElement& el = mesh.element(K);
    if (!el.active() || el.good || el.neighbor < 0) {
        throw InvalidArgument("projector requested for element " + std::to_string(K) +
                              " which is not a bad element with a good neighbor");
    }
    const MeshElement& nb = mesh.element(el.neighbor);
    const int k = spaces.degree();
    LocalProjector P;
    P.piola_ = spaces.piola();
    P.element_ = K;
    P.neighbor_ = el.neighbor;
    P.frame_ = nb.param;
    P.pdeg_ = {k, k};
    if (spaces.kind() == ElementKind::RT) {
        P.vdeg_ = {std::array<int, 2>{k + 1, k}, std::array<int, 2>{k, k + 1}};
    } else {
        P.vdeg_ = {std::array<int, 2>{k + 1, k + 1}, std::array<int, 2>{k + 1, k + 1}};
    }

    const int n = k + 3;
    const GaussRule g = gauss_legendre(n);
    const Vec2 c = nb.param.center();
    const Vec2 e = 0.5 * nb.param.extent();
    std::vector<Vec2> pts;
    std::vector<double> w;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            pts.emplace_back(c.x() + e.x() * g.x[static_cast<std::size_t>(i)], c.y() + e.y() * g.x[static_cast<std::size_t>(j)]);
            w.push_back(e.x() * e.y() * g.w[static_cast<std::size_t>(i)] * g.w[static_cast<std::size_t>(j)]);
        }
    }

    const ScalarValues ps = spaces.eval_pressure(nb, pts);
    P.pdofs_ = ps.dofs;
    P.Pp_ = project(P.frame_, P.pdeg_, pts, w, ps.val);

    // Parametric pullback of the velocity basis.
    const VelocityValues vs = spaces.eval_velocity(mesh, nb, pts, false);
    P.vdofs_ = vs.dofs;
    const Index nq = static_cast<Index>(pts.size());
    std::array<Eigen::MatrixXd, 2> vhat{Eigen::MatrixXd(nq, vs.size()), Eigen::MatrixXd(nq, vs.size())};
    const GeometryMap& F = mesh.domain().map;
    for (Index q = 0; q < nq; ++q) {
        Mat2 back = Mat2::Identity();
        if (P.piola_) {
            const MapPoint mp = F.eval(pts[static_cast<std::size_t>(q)], 1);
            back = mp.det * mp.DF.inverse();
        }
        for (Index j = 0; j < vs.size(); ++j) {
            const Vec2 h = back * vs.value(q, j);
            vhat[0](q, j) = h.x();
            vhat[1](q, j) = h.y();
        }
    }
    for (int cc = 0; cc < 2; ++cc) {
        P.Pv_[static_cast<std::size_t>(cc)] =
            project(P.frame_, P.vdeg_[static_cast<std::size_t>(cc)], pts, w, vhat[static_cast<std::size_t>(cc)]);
    }
    return P;
}

ScalarValues LocalProjector::pressure(const std::vector<Vec2>& params) const
{
    ScalarValues s;
    s.dofs = pdofs_;
    s.val.resize(static_cast<Index>(params.size()), static_cast<Index>(pdofs_.size()));
    for (std::size_t q = 0; q < params.size(); ++q) {
        s.val.row(static_cast<Index>(q)) = legendre_row(frame_, pdeg_, params[q]).val * Pp_;
    }
    return s;
}

VelocityValues LocalProjector::velocity(const TrimmedMesh& mesh, const std::vector<Vec2>& params, bool gradients) const
{
    VelocityValues v;
    v.dofs = vdofs_;
    const Index nq = static_cast<Index>(params.size());
    const Index nd = static_cast<Index>(vdofs_.size());
    for (int c = 0; c < 2; ++c) {
        v.val[static_cast<std::size_t>(c)].resize(nq, nd);
        if (gradients) {
            v.grad[static_cast<std::size_t>(c)][0].resize(nq, nd);
            v.grad[static_cast<std::size_t>(c)][1].resize(nq, nd);
        }
    }
    const GeometryMap& F = mesh.domain().map;
    const bool curved = !F.is_affine();
    for (Index q = 0; q < nq; ++q) {
        const Vec2& z = params[static_cast<std::size_t>(q)];
        const MapPoint mp = F.eval(z, curved && piola_ && gradients ? 2 : 1);
        const Mat2 DFinv = mp.DF.inverse();
        std::array<Eigen::RowVectorXd, 2> val, dx, dy;
        for (int c = 0; c < 2; ++c) {
            const LegendreRow r = legendre_row(frame_, vdeg_[static_cast<std::size_t>(c)], z);
            val[static_cast<std::size_t>(c)] = r.val * Pv_[static_cast<std::size_t>(c)];
            if (gradients) {
                dx[static_cast<std::size_t>(c)] = r.dx * Pv_[static_cast<std::size_t>(c)];
                dy[static_cast<std::size_t>(c)] = r.dy * Pv_[static_cast<std::size_t>(c)];
            }
        }
        for (Index j = 0; j < nd; ++j) {
            const Vec2 vhat(val[0](j), val[1](j));
            Mat2 ghat = Mat2::Zero();
            if (gradients) {
                ghat << dx[0](j), dy[0](j), dx[1](j), dy[1](j);
            }
            Vec2 vv;
            Mat2 gg;
            if (piola_) {
                const PiolaResult r = curved && gradients ? piola_transform(mp.DF, mp.det, vhat, ghat, mp.d2F)
                                                          : piola_transform(mp.DF, mp.det, vhat, ghat);
                vv = r.v;
                gg = r.Dv;
            } else {
                vv = vhat;
                gg = ghat * DFinv;
            }
            for (int a = 0; a < 2; ++a) {
                v.val[static_cast<std::size_t>(a)](q, j) = vv(a);
                if (gradients) {
                    v.grad[static_cast<std::size_t>(a)][0](q, j) = gg(a, 0);
                    v.grad[static_cast<std::size_t>(a)][1](q, j) = gg(a, 1);
                }
            }
        }
    }
    return v;
}

Stabilization::Stabilization(const StokesSpaces& spaces, const TrimmedMesh& mesh)
    : by_element_(static_cast<std::size_t>(mesh.size()))
{
    for (Index e : mesh.bad()) {
        by_element_[static_cast<std::size_t>(e)] = build_projector(spaces, mesh, e);
        ++count_;
    }
}

const LocalProjector* Stabilization::find(Index element) const
{
    if (element < 0 || element >= static_cast<Index>(by_element_.size())) {
        return nullptr;
    }
    const auto& p = by_element_[static_cast<std::size_t>(element)];
    return p ? &*p : nullptr;
}

ScalarValues stabilized_pressure(const StokesSpaces& spaces, const Stabilization& stab, const MeshElement& el,
                                 Index id, const std::vector<Vec2>& params)
{
    if (const LocalProjector* p = stab.find(id)) {
        return p->pressure(params);
    }
    return spaces.eval_pressure(el, params);
}

VelocityValues stabilized_velocity(const StokesSpaces& spaces, const TrimmedMesh& mesh, const Stabilization& stab,
                                   const MeshElement& el, Index id, const std::vector<Vec2>& params)
{
    if (const LocalProjector* p = stab.find(id)) {
        return p->velocity(mesh, params, true);
    }
    return spaces.eval_velocity(mesh, el, params, true);
}

} // namespace trimstokes
