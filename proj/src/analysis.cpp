#include "trimstokes/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace trimstokes {

ProblemData ManufacturedCase::data() const
{
    ProblemData d;
    d.f = f;
    d.g = g;
    d.u_D = u;
    const double m = mu;
    const GradientField Du = grad_u;
    const ScalarField pp = p;
    d.sigma_N = [m, Du, pp](const Vec2& x, const Vec2& n) -> Vec2 { return m * (Du(x) * n) - pp(x) * n; };
    return d;
}

ManufacturedCase pentagon_case(double mu, double p_mean)
{
    ManufacturedCase c;
    c.name = "pentagon";
    c.mu = mu;
    c.u = [](const Vec2& x) -> Vec2 {
        const double X = x.x(), Y = x.y();
        return Vec2(X * Y * Y * Y, X * X * X * X - Y * Y * Y * Y / 4);
    };
    c.grad_u = [](const Vec2& x) -> Mat2 {
        const double X = x.x(), Y = x.y();
        Mat2 g;
        g << Y * Y * Y, 3 * X * Y * Y, 4 * X * X * X, -Y * Y * Y;
        return g;
    };
    c.p = [p_mean](const Vec2& x) {
        return x.x() * x.x() * x.x() * std::cos(x.x()) + x.y() * x.y() * std::sin(x.x()) - p_mean;
    };
    c.f = [mu](const Vec2& x) -> Vec2 {
        const double X = x.x(), Y = x.y();
        const Vec2 lap(6 * X * Y, 12 * X * X - 3 * Y * Y);
        const Vec2 gp(3 * X * X * std::cos(X) - X * X * X * std::sin(X) + Y * Y * std::cos(X), 2 * Y * std::sin(X));
        return -mu * lap + gp;
    };
    c.g = [](const Vec2&) { return 0.0; };
    return c;
}

ManufacturedCase circle_case(double mu)
{
    ManufacturedCase c;
    c.name = "circle_square";
    c.mu = mu;
    c.u = [](const Vec2& x) -> Vec2 {
        const double X = x.x(), Y = x.y();
        const double s = std::sin(X), co = std::cos(X);
        return Vec2(2 * Y * Y * Y * s, X * X * X * s - Y * Y * Y * Y * co / 2 - 3 * X * X * co);
    };
    c.grad_u = [](const Vec2& x) -> Mat2 {
        const double X = x.x(), Y = x.y();
        const double s = std::sin(X), co = std::cos(X);
        Mat2 g;
        g << 2 * Y * Y * Y * co, 6 * Y * Y * s,
            6 * X * X * s + X * X * X * co + Y * Y * Y * Y * s / 2 - 6 * X * co, -2 * Y * Y * Y * co;
        return g;
    };
    c.p = [](const Vec2& x) { return x.x() * x.x() * x.x() * x.y() * x.y() / 2 + x.y() * x.y() * x.y() / 2; };
    c.f = [mu](const Vec2& x) -> Vec2 {
        const double X = x.x(), Y = x.y();
        const double s = std::sin(X), co = std::cos(X);
        const double lap0 = -2 * Y * Y * Y * s + 12 * Y * s;
        const double lap1 = 18 * X * s + 9 * X * X * co - X * X * X * s + Y * Y * Y * Y * co / 2 - 6 * co -
                            6 * Y * Y * co;
        const Vec2 gp(1.5 * X * X * Y * Y, X * X * X * Y + 1.5 * Y * Y);
        return -mu * Vec2(lap0, lap1) + gp;
    };
    c.g = [](const Vec2&) { return 0.0; };
    return c;
}

ManufacturedCase patch_case(double mu)
{
    ManufacturedCase c;
    c.name = "patch";
    c.mu = mu;
    c.u = [](const Vec2& x) -> Vec2 { return Vec2(x.y(), x.x()); };
    c.grad_u = [](const Vec2&) -> Mat2 {
        Mat2 g;
        g << 0, 1, 1, 0;
        return g;
    };
    c.p = [](const Vec2&) { return 0.0; };
    c.f = [](const Vec2&) -> Vec2 { return Vec2::Zero(); };
    c.g = [](const Vec2&) { return 0.0; };
    return c;
}

TrimmedDomain pentagon_domain(double eps, BCTag fitted)
{
    TrimmedDomain d;
    d.primitives.push_back(make_convex_polygon({Vec2(0, 0.25 + eps), Vec2(0.75 - eps, 1), Vec2(0, 1)}));
    d.faces = {fitted, fitted, fitted, fitted};
    return d;
}

TrimmedDomain rectangle_domain(double eps, BCTag fitted)
{
    TrimmedDomain d;
    d.primitives.push_back(make_half_plane(Vec2(0, -1), -(0.75 + eps)));
    d.faces = {fitted, fitted, fitted, fitted};
    return d;
}

TrimmedDomain circle_square_domain()
{
    TrimmedDomain d;
    d.map = GeometryMap::affine(Vec2(2, 2), Vec2(0, 0));
    d.primitives.push_back(make_disk(Vec2(0, 0), 0.52));
    d.faces = {BCTag::neumann, BCTag::dirichlet_strong, BCTag::neumann, BCTag::dirichlet_strong};
    return d;
}

TrimmedDomain cylinder_domain()
{
    TrimmedDomain d;
    d.map = GeometryMap::affine(Vec2(2.2, 0.41), Vec2(0, 0));
    d.primitives.push_back(make_disk(Vec2(0.2, 0.2), 0.05));
    d.faces = {BCTag::dirichlet_strong, BCTag::neumann, BCTag::dirichlet_strong, BCTag::dirichlet_strong};
    return d;
}

VectorField cylinder_velocity_data()
{
    const double H = 0.41, Um = 0.3;
    return [=](const Vec2& x) -> Vec2 {
        if (x.x() <= 1e-12) {
            return Vec2(4 * Um * x.y() * (H - x.y()) / (H * H), 0.0);
        }
        return Vec2::Zero();
    };
}

double integrate(const TrimmedDomain& domain, Index n, int order, const ScalarField& s)
{
    const TrimmedMesh mesh = build_mesh(domain, uniform_breakpoints(n), uniform_breakpoints(n), MeshOptions{order});
    double sum = 0.0;
    for (const MeshElement& el : mesh.elements()) {
        for (std::size_t q = 0; q < el.volume.size(); ++q) {
            sum += el.volume.weights[q] * s(el.volume.points[q]);
        }
    }
    return sum;
}

Discretization discretize(const TrimmedDomain& domain, Index nx, Index ny, const SolverOptions& opt,
                          const VectorField& u_D)
{
    const int k = opt.element.k;
    MeshOptions mo;
    mo.quad_order = opt.quad_order > 0 ? opt.quad_order : k + 3;
    mo.mesh_size = opt.mesh_size;
    Discretization d;
    d.mesh = build_mesh(domain, uniform_breakpoints(nx), uniform_breakpoints(ny), mo);
    classify_good_bad(d.mesh, opt.theta);
    d.stabilized = opt.form.stabilized;
    d.spaces = build_spaces(opt.element, d.mesh, opt.form.stabilized, u_D);
    if (d.stabilized) {
        d.stab = Stabilization(d.spaces, d.mesh);
    }
    return d;
}

bool has_neumann(const TrimmedMesh& mesh)
{
    for (const MeshElement& el : mesh.elements()) {
        for (const BoundaryRule& br : el.boundary) {
            if (br.tag == BCTag::neumann && br.measure() > 0.0) {
                return true;
            }
        }
    }
    return false;
}

bool needs_mean_border(const TrimmedMesh& mesh)
{
    return !has_neumann(mesh);
}

Solution solve(const Discretization& disc, const FormParams& form, const ProblemData& data)
{
    const AssembledSystem sys = assemble(disc.mesh, disc.spaces, disc.stab, form, data);
    Solution sol;
    sol.mean_border = needs_mean_border(disc.mesh);
    const SaddleSystem saddle = saddle_system(sys, sol.mean_border);
    const SolveReport rep = solve_saddle(saddle);
    sol.residual = rep.residual;
    const StokesSpaces& sp = disc.spaces;
    sol.u = Eigen::VectorXd::Zero(sp.velocity_size());
    for (Index i = 0; i < sp.velocity_size(); ++i) {
        const Index r = sp.velocity_unknown()[static_cast<std::size_t>(i)];
        if (r >= 0) {
            sol.u(i) = rep.x(r);
        } else if (sp.is_constrained(i)) {
            sol.u(i) = sp.constrained_value(i);
        }
    }
    sol.p = Eigen::VectorXd::Zero(sp.pressure_size());
    for (Index i = 0; i < sp.pressure_size(); ++i) {
        const Index r = sp.pressure_unknown()[static_cast<std::size_t>(i)];
        if (r >= 0) {
            sol.p(i) = rep.x(saddle.nu + r);
        }
    }
    return sol;
}

namespace {

struct PointFields {
    Vec2 u;
    Mat2 Du;
    double p;
};

double combine(const Eigen::VectorXd& c, const std::vector<Index>& dofs, const Eigen::MatrixXd& m, Index q)
{
    double s = 0.0;
    for (std::size_t j = 0; j < dofs.size(); ++j) {
        s += c(dofs[j]) * m(q, static_cast<Index>(j));
    }
    return s;
}

std::vector<PointFields> fields_at(const Discretization& disc, const TrimmedMesh& mesh, const Solution& sol,
                                   const MeshElement& el, Index id, const std::vector<Vec2>& params, bool grads)
{
    const VelocityValues v = disc.spaces.eval_velocity(mesh, el, params, grads);
    const ScalarValues p = stabilized_pressure(disc.spaces, disc.stab, el, id, params);
    std::vector<PointFields> out(params.size());
    for (std::size_t q = 0; q < params.size(); ++q) {
        const Index qi = static_cast<Index>(q);
        PointFields& f = out[q];
        f.u = Vec2(combine(sol.u, v.dofs, v.val[0], qi), combine(sol.u, v.dofs, v.val[1], qi));
        f.Du = Mat2::Zero();
        if (grads) {
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    f.Du(a, b) = combine(sol.u, v.dofs, v.grad[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], qi);
                }
            }
        }
        f.p = combine(sol.p, p.dofs, p.val, qi);
    }
    return out;
}

} // namespace

ErrorNorms error_norms(const Discretization& disc, const TrimmedMesh& mesh, const Solution& sol,
                       const ManufacturedCase& mc, bool subtract_mean)
{
    const double mu = mc.mu;
    double e1 = 0.0, ediv = 0.0;
    // Pressure differences with their weights; the mean is removed in a
    // second pass (a one-pass moment formula cancels catastrophically).
    std::vector<std::pair<double, double>> vol_d;
    std::vector<std::pair<double, double>> bnd_d;
    double area = 0.0;
    double mean = 0.0;
    for (Index id = 0; id < mesh.size(); ++id) {
        const MeshElement& el = mesh.element(id);
        if (!el.active()) {
            continue;
        }
        const VolumeRule& vr = el.volume;
        const auto F = fields_at(disc, mesh, sol, el, id, vr.params, true);
        for (std::size_t q = 0; q < vr.size(); ++q) {
            const Vec2& x = vr.points[q];
            const double w = vr.weights[q];
            e1 += mu * w * (mc.grad_u(x) - F[q].Du).squaredNorm();
            const double dv = F[q].Du.trace() - mc.g(x);
            ediv += w * dv * dv;
            const double d = mc.p(x) - F[q].p;
            vol_d.emplace_back(w, d);
            area += w;
            mean += w * d;
        }
        for (const BoundaryRule& br : el.boundary) {
            if (br.tag == BCTag::neumann || br.size() == 0) {
                continue;
            }
            const auto Fb = fields_at(disc, mesh, sol, el, id, br.params, false);
            for (std::size_t q = 0; q < br.size(); ++q) {
                const Vec2& x = br.points[q];
                const double w = br.weights[q];
                e1 += mu / br.h * w * (mc.u(x) - Fb[q].u).squaredNorm();
                bnd_d.emplace_back(br.h * w, mc.p(x) - Fb[q].p);
            }
        }
    }
    const double c = subtract_mean && area > 0.0 ? mean / area : 0.0;
    double p2 = 0.0;
    for (const auto& [w, d] : vol_d) {
        p2 += w * (d - c) * (d - c);
    }
    for (const auto& [w, d] : bnd_d) {
        p2 += w * (d - c) * (d - c);
    }
    ErrorNorms e;
    e.e1h = std::sqrt(std::max(e1, 0.0));
    e.e0h = std::sqrt(std::max(p2, 0.0) / mu);
    e.ediv = std::sqrt(std::max(ediv, 0.0));
    return e;
}

CaseRun measure_case(const Discretization& disc, const Solution& sol, const SolverOptions& opt,
                     const ManufacturedCase& mc)
{
    const TrimmedMesh& mesh = disc.mesh;
    MeshOptions mo;
    mo.quad_order = opt.error_quad_order > 0 ? opt.error_quad_order : opt.element.k + 4;
    mo.mesh_size = opt.mesh_size;
    TrimmedMesh emesh = build_mesh(mesh.domain(), mesh.breakpoints(0), mesh.breakpoints(1), mo);
    classify_good_bad(emesh, opt.theta);
    CaseRun r;
    r.nx = mesh.nx();
    r.ny = mesh.ny();
    r.velocity_unknowns = disc.spaces.num_velocity_unknowns();
    r.pressure_unknowns = disc.spaces.num_pressure_unknowns();
    r.bad_elements = static_cast<Index>(mesh.bad().size());
    r.active_elements = static_cast<Index>(mesh.active().size());
    r.residual = sol.residual;
    r.mean_border = sol.mean_border;
    r.errors = error_norms(disc, emesh, sol, mc, !has_neumann(mesh));
    return r;
}

CaseRun run_case(const TrimmedDomain& domain, Index nx, Index ny, const SolverOptions& opt,
                 const ManufacturedCase& mc)
{
    const Discretization disc = discretize(domain, nx, ny, opt, mc.u);
    const Solution sol = solve(disc, opt.form, mc.data());
    return measure_case(disc, sol, opt, mc);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) {
        throw InvalidArgument("slope fit needs at least two points");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

void fit_slopes(ConvergenceTable& t)
{
    if (t.rows.size() < 3) {
        throw InvalidArgument("slopes need at least three levels");
    }
    std::vector<double> h, e1, e0, ec, ed;
    for (std::size_t i = t.rows.size() - 3; i < t.rows.size(); ++i) {
        const ErrorNorms& e = t.rows[i].run.errors;
        h.push_back(t.rows[i].h);
        e1.push_back(e.e1h);
        e0.push_back(e.e0h);
        ec.push_back(e.e1h + e.e0h);
        ed.push_back(std::max(e.ediv, 1e-300));
    }
    t.slope_e1h = loglog_slope(h, e1);
    t.slope_e0h = loglog_slope(h, e0);
    t.slope_combined = loglog_slope(h, ec);
    t.slope_div = loglog_slope(h, ed);
}

ConvergenceTable convergence_study(const TrimmedDomain& domain, const ManufacturedCase& mc, const SolverOptions& opt,
                                   const std::vector<int>& levels)
{
    if (levels.size() < 3) {
        throw InvalidArgument("a convergence study needs at least three levels");
    }
    ConvergenceTable t;
    for (int l : levels) {
        const Index n = Index(1) << l;
        ConvergenceRow row;
        row.h = 1.0 / static_cast<double>(n);
        row.run = run_case(domain, n, n, opt, mc);
        t.rows.push_back(row);
    }
    fit_slopes(t);
    return t;
}

std::vector<InfSupRow> infsup_table(const TrimmedDomain& domain, const SolverOptions& opt,
                                    const std::vector<int>& levels)
{
    std::vector<InfSupRow> rows;
    for (int l : levels) {
        const Index n = Index(1) << l;
        InfSupRow row;
        row.h = 1.0 / static_cast<double>(n);
        try {
            const Discretization disc = discretize(domain, n, n, opt, nullptr);
            FormParams form = opt.form;
            form.m = 0;
            const AssembledSystem sys = assemble(disc.mesh, disc.spaces, disc.stab, form, ProblemData{});
            const NormMatrices nm = assemble_norm_matrices(disc.mesh, disc.spaces, disc.stab, form.mu, disc.stabilized);
            const Eigen::VectorXd* exclude = has_neumann(disc.mesh) ? nullptr : &sys.pressure_mean;
            row.beta0 = infsup_constant(sys.Bm, nm.Nv, nm.Mp, exclude);
            row.beta1 = infsup_constant(sys.B1, nm.Nv, nm.Mp, exclude);
            row.pressure_unknowns = disc.spaces.num_pressure_unknowns();
            row.bad_elements = static_cast<Index>(disc.mesh.bad().size());
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<ContinuityRow> continuity_sweep(const SolverOptions& opt, const std::vector<double>& eps_list,
                                            const std::vector<int>& levels)
{
    std::vector<ContinuityRow> rows;
    for (double eps : eps_list) {
        for (int l : levels) {
            const Index n = Index(1) << l;
            const Discretization disc = discretize(rectangle_domain(eps, BCTag::dirichlet_weak), n, n, opt, nullptr);
            const AssembledSystem sys = assemble(disc.mesh, disc.spaces, disc.stab, opt.form, ProblemData{});
            const NormMatrices nm = assemble_norm_matrices(disc.mesh, disc.spaces, disc.stab, opt.form.mu, disc.stabilized);
            ContinuityRow row;
            row.eps = eps;
            row.h = 1.0 / static_cast<double>(n);
            row.lambda_max = gen_eig_max(sys.A, nm.Nv).value;
            rows.push_back(row);
        }
    }
    return rows;
}

std::optional<std::pair<Vec2, double>> sample(const Discretization& disc, const Solution& sol, const Vec2& x)
{
    const TrimmedMesh& mesh = disc.mesh;
    const TrimmedDomain& dom = mesh.domain();
    if (region_inside(dom, x) != Region::inside) {
        return std::nullopt;
    }
    const Vec2 z = dom.map.inverse(x);
    const auto locate = [](const std::vector<double>& b, double s) {
        const auto it = std::upper_bound(b.begin(), b.end(), s);
        const Index i = static_cast<Index>(it - b.begin()) - 1;
        return std::clamp<Index>(i, 0, static_cast<Index>(b.size()) - 2);
    };
    const Index id = mesh.index(locate(mesh.breakpoints(0), z.x()), locate(mesh.breakpoints(1), z.y()));
    const MeshElement& el = mesh.element(id);
    if (!el.active()) {
        return std::nullopt;
    }
    const auto f = fields_at(disc, mesh, sol, el, id, {z}, false);
    return std::make_pair(f[0].u, f[0].p);
}

CylinderResult cylinder_demo(const SolverOptions& opt, Index nx, Index ny, Index raster_nx, Index raster_ny)
{
    const double H = 0.41, L = 2.2;
    const TrimmedDomain domain = cylinder_domain();
    const VectorField u_D = cylinder_velocity_data();
    const Discretization disc = discretize(domain, nx, ny, opt, u_D);
    ProblemData data;
    data.u_D = u_D;
    const Solution sol = solve(disc, opt.form, data);

    CylinderResult r;
    r.run.nx = nx;
    r.run.ny = ny;
    r.run.velocity_unknowns = disc.spaces.num_velocity_unknowns();
    r.run.pressure_unknowns = disc.spaces.num_pressure_unknowns();
    r.run.bad_elements = static_cast<Index>(disc.mesh.bad().size());
    r.run.active_elements = static_cast<Index>(disc.mesh.active().size());
    r.run.residual = sol.residual;
    r.run.mean_border = sol.mean_border;
    if (!sol.u.allFinite() || !sol.p.allFinite()) {
        throw SolverFault("cylinder solution contains NaN or Inf");
    }
    r.max_speed = 0.0;
    r.min_speed = std::numeric_limits<double>::infinity();
    r.max_pressure = -std::numeric_limits<double>::infinity();
    r.min_pressure = std::numeric_limits<double>::infinity();
    double in = 0.0, out = 0.0;
    for (Index id = 0; id < disc.mesh.size(); ++id) {
        const MeshElement& el = disc.mesh.element(id);
        if (!el.active()) {
            continue;
        }
        const auto F = fields_at(disc, disc.mesh, sol, el, id, el.volume.params, false);
        for (const PointFields& f : F) {
            r.max_speed = std::max(r.max_speed, f.u.norm());
            r.min_speed = std::min(r.min_speed, f.u.norm());
            r.max_pressure = std::max(r.max_pressure, f.p);
            r.min_pressure = std::min(r.min_pressure, f.p);
        }
        for (const BoundaryRule& br : el.boundary) {
            if (br.face != face_left && br.face != face_right) {
                continue;
            }
            const auto Fb = fields_at(disc, disc.mesh, sol, el, id, br.params, false);
            for (std::size_t q = 0; q < br.size(); ++q) {
                const double flux = br.weights[q] * Fb[q].u.dot(br.normals[q]);
                (br.face == face_left ? in : out) += flux;
            }
        }
    }
    r.inflow = std::abs(in);
    r.imbalance = std::abs(in + out);
    for (Index j = 0; j < raster_ny; ++j) {
        for (Index i = 0; i < raster_nx; ++i) {
            const Vec2 x(L * (i + 0.5) / static_cast<double>(raster_nx), H * (j + 0.5) / static_cast<double>(raster_ny));
            if (const auto s = sample(disc, sol, x)) {
                r.raster.push_back({x.x(), x.y(), s->first.norm(), s->second});
                r.max_speed = std::max(r.max_speed, s->first.norm());
            }
        }
    }
    return r;
}

} // namespace trimstokes
