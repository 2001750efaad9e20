#include "trimstokes/assembly.hpp"

#include <fstream>
#include <iomanip>

namespace trimstokes {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::VectorXd weights_of(const std::vector<double>& w)
{
    return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));
}

// Velocity traces and normal fluxes on one boundary rule; optionally reduced
// to their tangential parts.
struct FaceBasis {
    std::array<Eigen::MatrixXd, 2> trace;
    std::array<Eigen::MatrixXd, 2> flux;
};

std::array<Eigen::MatrixXd, 2> normal_flux(const VelocityValues& v, const std::vector<Vec2>& normals)
{
    std::array<Eigen::MatrixXd, 2> out;
    const Index nq = static_cast<Index>(normals.size());
    Eigen::VectorXd n0(nq), n1(nq);
    for (Index q = 0; q < nq; ++q) {
        n0(q) = normals[static_cast<std::size_t>(q)].x();
        n1(q) = normals[static_cast<std::size_t>(q)].y();
    }
    for (int c = 0; c < 2; ++c) {
        out[static_cast<std::size_t>(c)] = n0.asDiagonal() * v.grad[static_cast<std::size_t>(c)][0] +
                                           n1.asDiagonal() * v.grad[static_cast<std::size_t>(c)][1];
    }
    return out;
}

void tangential(std::array<Eigen::MatrixXd, 2>& m, const std::vector<Vec2>& normals)
{
    for (Index q = 0; q < m[0].rows(); ++q) {
        const Vec2& n = normals[static_cast<std::size_t>(q)];
        const Eigen::RowVectorXd vn = n.x() * m[0].row(q) + n.y() * m[1].row(q);
        m[0].row(q) -= n.x() * vn;
        m[1].row(q) -= n.y() * vn;
    }
}

Vec2 tangential(const Vec2& v, const Vec2& n)
{
    return v - v.dot(n) * n;
}

class Scatter {
public:
    Scatter(const StokesSpaces& sp, Index nu, Index np) : sp_(sp), F_(Eigen::VectorXd::Zero(nu)), G_(Eigen::VectorXd::Zero(np)) {}

    // Velocity-velocity block: rows test DOFs, columns trial DOFs.
    void vv(const std::vector<Index>& rows, const std::vector<Index>& cols, const Eigen::MatrixXd& loc)
    {
        const auto& vu = sp_.velocity_unknown();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Index r = vu[static_cast<std::size_t>(rows[i])];
            if (r < 0) {
                continue;
            }
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const double a = loc(static_cast<Index>(i), static_cast<Index>(j));
                if (a == 0.0) {
                    continue;
                }
                const Index cdof = cols[j];
                const Index c = vu[static_cast<std::size_t>(cdof)];
                if (c >= 0) {
                    A_.emplace_back(r, c, a);
                } else if (sp_.is_constrained(cdof)) {
                    F_(r) -= a * sp_.constrained_value(cdof);
                }
            }
        }
    }

    // Pressure-velocity block of b_1 (b1) and b_m (bm).
    void pv(const std::vector<Index>& prow, const std::vector<Index>& vcol, const Eigen::MatrixXd& b1,
            const Eigen::MatrixXd& bm)
    {
        const auto& vu = sp_.velocity_unknown();
        const auto& pu = sp_.pressure_unknown();
        for (std::size_t i = 0; i < prow.size(); ++i) {
            const Index r = pu[static_cast<std::size_t>(prow[i])];
            if (r < 0) {
                continue;
            }
            for (std::size_t j = 0; j < vcol.size(); ++j) {
                const Index cdof = vcol[j];
                const Index c = vu[static_cast<std::size_t>(cdof)];
                const double a1 = b1(static_cast<Index>(i), static_cast<Index>(j));
                const double am = bm(static_cast<Index>(i), static_cast<Index>(j));
                if (c >= 0) {
                    if (a1 != 0.0) {
                        B1_.emplace_back(r, c, a1);
                    }
                    if (am != 0.0) {
                        Bm_.emplace_back(r, c, am);
                    }
                } else if (sp_.is_constrained(cdof)) {
                    G_(r) -= am * sp_.constrained_value(cdof);
                }
            }
        }
    }

    void fv(const std::vector<Index>& rows, const Eigen::VectorXd& loc)
    {
        const auto& vu = sp_.velocity_unknown();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Index r = vu[static_cast<std::size_t>(rows[i])];
            if (r >= 0) {
                F_(r) += loc(static_cast<Index>(i));
            }
        }
    }

    void gp(const std::vector<Index>& rows, const Eigen::VectorXd& loc)
    {
        const auto& pu = sp_.pressure_unknown();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Index r = pu[static_cast<std::size_t>(rows[i])];
            if (r >= 0) {
                G_(r) += loc(static_cast<Index>(i));
            }
        }
    }

    Triplets A_, B1_, Bm_;
    const StokesSpaces& sp_;
    Eigen::VectorXd F_, G_;
};

SparseMatrix build(Index rows, Index cols, const Triplets& t)
{
    SparseMatrix M(rows, cols);
    M.setFromTriplets(t.begin(), t.end());
    M.makeCompressed();
    return M;
}

// Face treatment of a boundary rule: 0 skip, 1 full Nitsche, 2 tangential Nitsche.
int dirichlet_mode(const StokesSpaces& sp, BCTag tag)
{
    if (tag == BCTag::dirichlet_weak) {
        return 1;
    }
    if (tag == BCTag::dirichlet_strong) {
        return sp.piola() ? 2 : 0;
    }
    return 0;
}

} // namespace

AssembledSystem assemble(const TrimmedMesh& mesh, const StokesSpaces& sp, const Stabilization& stab_in,
                         const FormParams& params, const ProblemData& data)
{
    if (!(params.gamma > 0.0)) {
        throw InvalidArgument("Nitsche penalty gamma must be positive");
    }
    if (params.m != 0 && params.m != 1) {
        throw InvalidArgument("m must be 0 or 1");
    }
    if (!(params.mu > 0.0)) {
        throw InvalidArgument("viscosity mu must be positive");
    }
    const Stabilization none;
    const Stabilization& stab = params.stabilized ? stab_in : none;
    if (params.stabilized && static_cast<Index>(mesh.bad().size()) != stab.size()) {
        throw InvalidArgument("missing projector for a bad element");
    }
    const double mu = params.mu;
    const Index nu = sp.num_velocity_unknowns();
    const Index np = sp.num_pressure_unknowns();
    Scatter S(sp, nu, np);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(np);

    for (Index id = 0; id < mesh.size(); ++id) {
        const MeshElement& el = mesh.element(id);
        if (!el.active()) {
            continue;
        }
        // Volume terms.
        {
            const VolumeRule& vr = el.volume;
            const Eigen::VectorXd w = weights_of(vr.weights);
            const VelocityValues v = sp.eval_velocity(mesh, el, vr.params, true);
            const ScalarValues p = stabilized_pressure(sp, stab, el, id, vr.params);
            Eigen::MatrixXd Aloc = Eigen::MatrixXd::Zero(v.size(), v.size());
            for (int c = 0; c < 2; ++c) {
                for (int d = 0; d < 2; ++d) {
                    const Eigen::MatrixXd& Gd = v.grad[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)];
                    Aloc.noalias() += mu * Gd.transpose() * w.asDiagonal() * Gd;
                }
            }
            S.vv(v.dofs, v.dofs, Aloc);
            const Eigen::MatrixXd div = v.grad[0][0] + v.grad[1][1];
            const Eigen::MatrixXd Bloc = -p.val.transpose() * w.asDiagonal() * div;
            S.pv(p.dofs, v.dofs, Bloc, Bloc);
            Eigen::VectorXd fq0(vr.size()), fq1(vr.size()), gq(vr.size());
            for (std::size_t q = 0; q < vr.size(); ++q) {
                const Vec2 f = data.f ? data.f(vr.points[q]) : Vec2::Zero();
                fq0(static_cast<Index>(q)) = w(static_cast<Index>(q)) * f.x();
                fq1(static_cast<Index>(q)) = w(static_cast<Index>(q)) * f.y();
                gq(static_cast<Index>(q)) = w(static_cast<Index>(q)) * (data.g ? data.g(vr.points[q]) : 0.0);
            }
            S.fv(v.dofs, v.val[0].transpose() * fq0 + v.val[1].transpose() * fq1);
            S.gp(p.dofs, -p.val.transpose() * gq);
            const Eigen::VectorXd pint = p.val.transpose() * w;
            for (std::size_t i = 0; i < p.dofs.size(); ++i) {
                const Index r = sp.pressure_unknown()[static_cast<std::size_t>(p.dofs[i])];
                if (r >= 0) {
                    mean(r) += pint(static_cast<Index>(i));
                }
            }
        }
        // Boundary terms.
        for (const BoundaryRule& br : el.boundary) {
            if (br.size() == 0) {
                continue;
            }
            const Eigen::VectorXd w = weights_of(br.weights);
            const VelocityValues v = sp.eval_velocity(mesh, el, br.params, br.tag != BCTag::neumann);
            if (br.tag == BCTag::neumann) {
                Eigen::VectorXd s0(br.size()), s1(br.size());
                for (std::size_t q = 0; q < br.size(); ++q) {
                    const Vec2 s = data.sigma_N ? data.sigma_N(br.points[q], br.normals[q]) : Vec2::Zero();
                    s0(static_cast<Index>(q)) = w(static_cast<Index>(q)) * s.x();
                    s1(static_cast<Index>(q)) = w(static_cast<Index>(q)) * s.y();
                }
                S.fv(v.dofs, v.val[0].transpose() * s0 + v.val[1].transpose() * s1);
                continue;
            }
            const int mode = dirichlet_mode(sp, br.tag);
            if (mode == 0) {
                continue;
            }
            const VelocityValues rv = stabilized_velocity(sp, mesh, stab, el, id, br.params);
            std::array<Eigen::MatrixXd, 2> trace{v.val[0], v.val[1]};
            std::array<Eigen::MatrixXd, 2> flux = normal_flux(rv, br.normals);
            std::vector<Vec2> uD(br.size(), Vec2::Zero());
            for (std::size_t q = 0; q < br.size(); ++q) {
                uD[q] = data.u_D ? data.u_D(br.points[q]) : Vec2::Zero();
                if (mode == 2) {
                    uD[q] = tangential(uD[q], br.normals[q]);
                }
            }
            if (mode == 2) {
                tangential(trace, br.normals);
                tangential(flux, br.normals);
            }
            const double pen = params.gamma / br.h;
            // -<mu D R(w) n, v>: rows plain, columns R
            Eigen::MatrixXd C = Eigen::MatrixXd::Zero(v.size(), rv.size());
            Eigen::MatrixXd P = Eigen::MatrixXd::Zero(v.size(), v.size());
            for (int c = 0; c < 2; ++c) {
                C.noalias() -= mu * trace[static_cast<std::size_t>(c)].transpose() * w.asDiagonal() *
                               flux[static_cast<std::size_t>(c)];
                P.noalias() += pen * trace[static_cast<std::size_t>(c)].transpose() * w.asDiagonal() *
                               trace[static_cast<std::size_t>(c)];
            }
            S.vv(v.dofs, rv.dofs, C);
            S.vv(rv.dofs, v.dofs, C.transpose());
            S.vv(v.dofs, v.dofs, P);
            Eigen::VectorXd u0(br.size()), u1(br.size()), un(br.size());
            for (std::size_t q = 0; q < br.size(); ++q) {
                u0(static_cast<Index>(q)) = w(static_cast<Index>(q)) * uD[q].x();
                u1(static_cast<Index>(q)) = w(static_cast<Index>(q)) * uD[q].y();
                un(static_cast<Index>(q)) = w(static_cast<Index>(q)) * uD[q].dot(br.normals[q]);
            }
            S.fv(rv.dofs, -mu * (flux[0].transpose() * u0 + flux[1].transpose() * u1));
            S.fv(v.dofs, pen * (trace[0].transpose() * u0 + trace[1].transpose() * u1));
            if (mode == 1) {
                const ScalarValues p = stabilized_pressure(sp, stab, el, id, br.params);
                Eigen::MatrixXd vn = trace[0];
                for (Index q = 0; q < vn.rows(); ++q) {
                    const Vec2& n = br.normals[static_cast<std::size_t>(q)];
                    vn.row(q) = n.x() * trace[0].row(q) + n.y() * trace[1].row(q);
                }
                const Eigen::MatrixXd Bq = p.val.transpose() * w.asDiagonal() * vn;
                S.pv(p.dofs, v.dofs, Bq, params.m * Bq);
                if (params.m == 1) {
                    S.gp(p.dofs, p.val.transpose() * un);
                }
            }
        }
    }

    AssembledSystem sys;
    sys.A = build(nu, nu, S.A_);
    sys.B1 = build(np, nu, S.B1_);
    sys.Bm = build(np, nu, S.Bm_);
    sys.F = S.F_;
    sys.G = S.G_;
    sys.pressure_mean = mean;
    sys.params = params;
    return sys;
}

NormMatrices assemble_norm_matrices(const TrimmedMesh& mesh, const StokesSpaces& sp, const Stabilization& stab_in,
                                    double mu, bool stabilized)
{
    const Stabilization none;
    const Stabilization& stab = stabilized ? stab_in : none;
    const auto& vu = sp.velocity_unknown();
    const auto& pu = sp.pressure_unknown();
    Triplets tv, tp;
    auto add = [](Triplets& t, const std::vector<Index>& map, const std::vector<Index>& dofs, const Eigen::MatrixXd& loc) {
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            const Index r = map[static_cast<std::size_t>(dofs[i])];
            if (r < 0) {
                continue;
            }
            for (std::size_t j = 0; j < dofs.size(); ++j) {
                const Index c = map[static_cast<std::size_t>(dofs[j])];
                if (c >= 0 && loc(static_cast<Index>(i), static_cast<Index>(j)) != 0.0) {
                    t.emplace_back(r, c, loc(static_cast<Index>(i), static_cast<Index>(j)));
                }
            }
        }
    };
    for (Index id = 0; id < mesh.size(); ++id) {
        const MeshElement& el = mesh.element(id);
        if (!el.active()) {
            continue;
        }
        const VolumeRule& vr = el.volume;
        const Eigen::VectorXd w = weights_of(vr.weights);
        const VelocityValues v = sp.eval_velocity(mesh, el, vr.params, true);
        Eigen::MatrixXd N = Eigen::MatrixXd::Zero(v.size(), v.size());
        for (int c = 0; c < 2; ++c) {
            for (int d = 0; d < 2; ++d) {
                const Eigen::MatrixXd& Gd = v.grad[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)];
                N.noalias() += mu * Gd.transpose() * w.asDiagonal() * Gd;
            }
        }
        add(tv, vu, v.dofs, N);
        const ScalarValues p = stabilized_pressure(sp, stab, el, id, vr.params);
        add(tp, pu, p.dofs, (1.0 / mu) * p.val.transpose() * w.asDiagonal() * p.val);
        for (const BoundaryRule& br : el.boundary) {
            if (br.tag == BCTag::neumann || br.size() == 0) {
                continue;
            }
            const Eigen::VectorXd wb = weights_of(br.weights);
            const VelocityValues vb = sp.eval_velocity(mesh, el, br.params, false);
            const Eigen::MatrixXd Nb = (mu / br.h) * (vb.val[0].transpose() * wb.asDiagonal() * vb.val[0] +
                                                      vb.val[1].transpose() * wb.asDiagonal() * vb.val[1]);
            add(tv, vu, vb.dofs, Nb);
            const ScalarValues pb = stabilized_pressure(sp, stab, el, id, br.params);
            add(tp, pu, pb.dofs, (br.h / mu) * pb.val.transpose() * wb.asDiagonal() * pb.val);
        }
    }
    NormMatrices out;
    out.Nv = build(sp.num_velocity_unknowns(), sp.num_velocity_unknowns(), tv);
    out.Mp = build(sp.num_pressure_unknowns(), sp.num_pressure_unknowns(), tp);
    return out;
}

SaddleSystem saddle_system(const AssembledSystem& sys, bool mean_border)
{
    SaddleSystem s;
    s.nu = sys.A.rows();
    s.np = sys.Bm.rows();
    s.mean_border = mean_border;
    const Index n = s.nu + s.np + (mean_border ? 1 : 0);
    Triplets t;
    t.reserve(static_cast<std::size_t>(sys.A.nonZeros() + sys.B1.nonZeros() + sys.Bm.nonZeros() + 2 * s.np));
    for (Index k = 0; k < sys.A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it) {
            t.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (Index k = 0; k < sys.B1.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.B1, k); it; ++it) {
            t.emplace_back(it.col(), s.nu + it.row(), it.value());
        }
    }
    for (Index k = 0; k < sys.Bm.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys.Bm, k); it; ++it) {
            t.emplace_back(s.nu + it.row(), it.col(), it.value());
        }
    }
    if (mean_border) {
        for (Index i = 0; i < s.np; ++i) {
            if (sys.pressure_mean(i) != 0.0) {
                t.emplace_back(s.nu + i, n - 1, sys.pressure_mean(i));
                t.emplace_back(n - 1, s.nu + i, sys.pressure_mean(i));
            }
        }
    }
    s.K = build(n, n, t);
    s.rhs = Eigen::VectorXd::Zero(n);
    s.rhs.head(s.nu) = sys.F;
    s.rhs.segment(s.nu, s.np) = sys.G;
    return s;
}

Eigen::VectorXd jacobi_scale(SparseMatrix& K, Eigen::VectorXd& rhs)
{
    const Index n = K.rows();
    Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd d = K.diagonal();
    for (Index i = 0; i < n; ++i) {
        const double a = std::abs(d(i));
        if (a > 0.0) {
            s(i) = 1.0 / std::sqrt(std::max(a, 1e-300));
        }
    }
    K = s.asDiagonal() * K * s.asDiagonal();
    K.makeCompressed();
    rhs = s.cwiseProduct(rhs);
    return s;
}

void write_matrix_market(const SparseMatrix& M, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write " + path);
    }
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
    out << std::setprecision(17);
    for (Index k = 0; k < M.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(M, k); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

} // namespace trimstokes
