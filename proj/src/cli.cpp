#include "trimstokes/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace trimstokes {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& msg)
{
    throw ConfigError(msg);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) {
        fail(where + ": expected an object");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            fail("unknown key '" + it.key() + "' in " + where);
        }
    }
}

double get_number(const json& v, const std::string& where)
{
    if (!v.is_number()) {
        fail(where + ": expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        fail(where + ": not finite");
    }
    return x;
}

int get_int(const json& v, const std::string& where)
{
    if (!v.is_number_integer()) {
        fail(where + ": expected an integer");
    }
    return v.get<int>();
}

bool get_bool(const json& v, const std::string& where)
{
    if (!v.is_boolean()) {
        fail(where + ": expected true or false");
    }
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& where)
{
    if (!v.is_string()) {
        fail(where + ": expected a string");
    }
    return v.get<std::string>();
}

Vec2 get_vec2(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2) {
        fail(where + ": expected [x, y]");
    }
    return Vec2(get_number(v[0], where + "[0]"), get_number(v[1], where + "[1]"));
}

std::array<Index, 2> get_grid(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2) {
        fail(where + ": expected [nx, ny]");
    }
    std::array<Index, 2> g{};
    for (std::size_t d = 0; d < 2; ++d) {
        const int n = get_int(v[d], where);
        if (n < 1 || n > 1024) {
            fail(where + ": sizes must lie in [1, 1024]");
        }
        g[d] = n;
    }
    return g;
}

BCTag get_tag(const json& v, const std::string& where)
{
    const std::string s = get_string(v, where);
    try {
        return bc_tag_from_string(s);
    } catch (const Error&) {
        fail(where + ": unknown boundary tag '" + s + "' (dirichlet_strong, dirichlet_weak, neumann)");
    }
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

PolyTerms get_poly(const json& v, const std::string& where)
{
    if (!v.is_array()) {
        fail(where + ": expected a list of [c, i, j] terms");
    }
    PolyTerms t;
    for (std::size_t n = 0; n < v.size(); ++n) {
        const json& term = v[n];
        const std::string w = where + "[" + std::to_string(n) + "]";
        if (!term.is_array() || term.size() != 3) {
            fail(w + ": expected [c, i, j]");
        }
        const int i = get_int(term[1], w);
        const int j = get_int(term[2], w);
        if (i < 0 || j < 0) {
            fail(w + ": negative exponent");
        }
        t.push_back({get_number(term[0], w), static_cast<double>(i), static_cast<double>(j)});
    }
    return t;
}

double poly_eval(const PolyTerms& t, const Vec2& x, int dx, int dy)
{
    double s = 0.0;
    for (const auto& [c, pi, pj] : t) {
        const int i = static_cast<int>(pi);
        const int j = static_cast<int>(pj);
        if (i < dx || j < dy) {
            continue;
        }
        double f = c;
        for (int a = 0; a < dx; ++a) {
            f *= i - a;
        }
        for (int b = 0; b < dy; ++b) {
            f *= j - b;
        }
        s += f * std::pow(x.x(), i - dx) * std::pow(x.y(), j - dy);
    }
    return s;
}

TrimmedDomain parse_geometry(const json& g, ExperimentConfig& cfg)
{
    const std::string where = "geometry";
    json obj = g;
    if (g.is_string()) {
        obj = json::object();
        obj["preset"] = g;
    }
    if (!obj.is_object()) {
        fail(where + ": expected a preset name or an object");
    }
    TrimmedDomain d;
    if (obj.contains("preset")) {
        const std::string preset = get_string(obj["preset"], where + ".preset");
        cfg.geometry = preset;
        if (preset == "pentagon" || preset == "rectangle" || preset == "square") {
            check_keys(obj, where, {"preset", "eps", "fitted"});
            double eps = preset == "pentagon" ? 1e-13 : 0.0;
            if (obj.contains("eps")) {
                if (preset == "square") {
                    fail(where + ": the square preset takes no eps");
                }
                eps = get_number(obj["eps"], where + ".eps");
            } else if (preset == "pentagon") {
                cfg.defaults.push_back({"geometry.eps", "1e-13", "paper"});
            } else if (preset == "rectangle") {
                cfg.defaults.push_back({"geometry.eps", "0", "artifact default"});
            }
            if (eps < 0.0 || eps >= 0.25) {
                fail(where + ".eps must lie in [0, 0.25)");
            }
            BCTag fitted = BCTag::dirichlet_strong;
            if (obj.contains("fitted")) {
                fitted = get_tag(obj["fitted"], where + ".fitted");
            } else {
                cfg.defaults.push_back({"geometry.fitted", "dirichlet_strong", "artifact default"});
            }
            if (preset == "pentagon") {
                d = pentagon_domain(eps, fitted);
            } else if (preset == "rectangle") {
                d = rectangle_domain(eps, fitted);
            } else {
                d.faces = {fitted, fitted, fitted, fitted};
            }
        } else if (preset == "circle_square" || preset == "cylinder") {
            check_keys(obj, where, {"preset"});
            d = preset == "circle_square" ? circle_square_domain() : cylinder_domain();
        } else {
            fail(where + ".preset: unknown preset '" + preset +
                 "' (pentagon, rectangle, square, circle_square, cylinder)");
        }
    } else {
        cfg.geometry = "custom";
        check_keys(obj, where, {"box", "primitives", "faces"});
        if (obj.contains("box")) {
            const json& b = obj["box"];
            if (!b.is_array() || b.size() != 4) {
                fail(where + ".box: expected [x0, y0, x1, y1]");
            }
            std::array<double, 4> v{};
            for (std::size_t i = 0; i < 4; ++i) {
                v[i] = get_number(b[i], where + ".box");
            }
            if (!(v[2] > v[0] && v[3] > v[1])) {
                fail(where + ".box: empty box");
            }
            d.map = GeometryMap::affine(Vec2(v[2] - v[0], v[3] - v[1]), Vec2(v[0], v[1]));
        }
        if (obj.contains("primitives")) {
            const json& prims = obj["primitives"];
            if (!prims.is_array()) {
                fail(where + ".primitives: expected a list");
            }
            for (std::size_t i = 0; i < prims.size(); ++i) {
                const json& p = prims[i];
                const std::string w = where + ".primitives[" + std::to_string(i) + "]";
                if (!p.is_object() || !p.contains("type")) {
                    fail(w + ": expected an object with a type");
                }
                const std::string type = get_string(p["type"], w + ".type");
                try {
                    if (type == "half_plane") {
                        check_keys(p, w, {"type", "normal", "offset"});
                        d.primitives.push_back(
                            make_half_plane(get_vec2(p.at("normal"), w + ".normal"), get_number(p.at("offset"), w + ".offset")));
                    } else if (type == "disk") {
                        check_keys(p, w, {"type", "center", "radius"});
                        d.primitives.push_back(
                            make_disk(get_vec2(p.at("center"), w + ".center"), get_number(p.at("radius"), w + ".radius")));
                    } else if (type == "polygon") {
                        check_keys(p, w, {"type", "vertices"});
                        const json& vs = p.at("vertices");
                        if (!vs.is_array()) {
                            fail(w + ".vertices: expected a list of points");
                        }
                        std::vector<Vec2> verts;
                        for (const json& v : vs) {
                            verts.push_back(get_vec2(v, w + ".vertices"));
                        }
                        d.primitives.push_back(make_convex_polygon(std::move(verts)));
                    } else {
                        fail(w + ".type: unknown primitive '" + type + "' (half_plane, disk, polygon)");
                    }
                } catch (const json::out_of_range&) {
                    fail(w + ": missing field for " + type);
                } catch (const ConfigError&) {
                    throw;
                } catch (const Error& e) {
                    fail(w + ": " + e.what());
                }
            }
        }
        if (obj.contains("faces")) {
            const json& f = obj["faces"];
            check_keys(f, where + ".faces", {"left", "right", "bottom", "top"});
            const char* names[4] = {"left", "right", "bottom", "top"};
            for (int i = 0; i < 4; ++i) {
                if (f.contains(names[i])) {
                    d.faces[static_cast<std::size_t>(i)] = get_tag(f[names[i]], where + ".faces." + names[i]);
                } else {
                    cfg.defaults.push_back({std::string("geometry.faces.") + names[i], "dirichlet_weak", "artifact default"});
                }
            }
        } else {
            cfg.defaults.push_back({"geometry.faces", "dirichlet_weak", "artifact default"});
        }
    }
    try {
        d.validate();
    } catch (const Error& e) {
        fail(where + ": " + e.what());
    }
    return d;
}

std::vector<int> parse_levels(const json& v, const std::string& where)
{
    if (!v.is_array() || v.empty()) {
        fail(where + ": expected a non-empty list of levels");
    }
    std::vector<int> out;
    for (const json& l : v) {
        const int x = get_int(l, where);
        if (x < 0 || x > 9) {
            fail(where + ": levels must lie in [0, 9]");
        }
        if (!out.empty() && x <= out.back()) {
            fail(where + ": levels must be strictly increasing");
        }
        out.push_back(x);
    }
    return out;
}

std::string join_levels(const std::vector<int>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + std::to_string(v[i]);
    }
    return s + "]";
}

} // namespace

SolverOptions ExperimentConfig::solver_options(ElementKind kind, bool stab) const
{
    SolverOptions o;
    o.element = {kind, k, alpha};
    o.form.mu = mu;
    o.form.gamma = penalty();
    o.form.m = m;
    o.form.stabilized = stab;
    o.theta = theta;
    o.mesh_size = mesh_size;
    o.quad_order = quad_order;
    o.error_quad_order = error_quad_order;
    return o;
}

ManufacturedCase polynomial_case(double mu, const PolyTerms& ux, const PolyTerms& uy, const PolyTerms& p)
{
    ManufacturedCase c;
    c.name = "custom";
    c.mu = mu;
    c.u = [=](const Vec2& x) { return Vec2(poly_eval(ux, x, 0, 0), poly_eval(uy, x, 0, 0)); };
    c.grad_u = [=](const Vec2& x) {
        Mat2 g;
        g << poly_eval(ux, x, 1, 0), poly_eval(ux, x, 0, 1), poly_eval(uy, x, 1, 0), poly_eval(uy, x, 0, 1);
        return g;
    };
    c.p = [=](const Vec2& x) { return poly_eval(p, x, 0, 0); };
    c.f = [=](const Vec2& x) {
        const Vec2 lap(poly_eval(ux, x, 2, 0) + poly_eval(ux, x, 0, 2), poly_eval(uy, x, 2, 0) + poly_eval(uy, x, 0, 2));
        return Vec2(-mu * lap + Vec2(poly_eval(p, x, 1, 0), poly_eval(p, x, 0, 1)));
    };
    c.g = [=](const Vec2& x) { return poly_eval(ux, x, 1, 0) + poly_eval(uy, x, 0, 1); };
    return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& subcommand)
{
    static const std::vector<std::string> subs{"solve", "convergence", "infsup", "continuity", "cylinder"};
    if (std::find(subs.begin(), subs.end(), subcommand) == subs.end()) {
        fail("unknown subcommand '" + subcommand + "'");
    }
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    ExperimentConfig cfg;
    cfg.subcommand = subcommand;
    cfg.echo = root.dump();
    const bool is_solve = subcommand == "solve";
    const bool is_conv = subcommand == "convergence";
    const bool is_infsup = subcommand == "infsup";
    const bool is_cont = subcommand == "continuity";
    const bool is_cyl = subcommand == "cylinder";

    if (is_solve) {
        check_keys(root, "config", {"subcommand", "description", "output", "element", "params", "geometry", "case", "mesh"});
    } else if (is_conv) {
        check_keys(root, "config", {"subcommand", "description", "output", "element", "params", "geometry", "case", "levels"});
    } else if (is_infsup) {
        check_keys(root, "config", {"subcommand", "description", "output", "element", "params", "geometry", "levels"});
    } else if (is_cont) {
        check_keys(root, "config", {"subcommand", "description", "output", "element", "params", "eps", "levels"});
    } else {
        check_keys(root, "config", {"subcommand", "description", "output", "element", "params", "mesh", "raster"});
    }
    if (root.contains("subcommand") && get_string(root["subcommand"], "subcommand") != subcommand) {
        fail("config is for '" + root["subcommand"].get<std::string>() + "', not '" + subcommand + "'");
    }
    if (root.contains("description")) {
        get_string(root["description"], "description");
    }
    if (root.contains("output")) {
        cfg.output = get_string(root["output"], "output");
    }

    // element
    if (!root.contains("element") && !is_cyl) {
        fail("missing 'element'");
    }
    const json el = root.value("element", json::object());
    check_keys(el, "element", {"kind", "k", "alpha"});
    if (el.contains("kind")) {
        const json& kj = el["kind"];
        const json list = kj.is_array() ? kj : json::array({kj});
        if (list.empty()) {
            fail("element.kind: empty list");
        }
        for (const json& s : list) {
            const std::string name = get_string(s, "element.kind");
            try {
                cfg.kinds.push_back(element_kind_from_string(name));
            } catch (const Error&) {
                fail("element.kind: unknown element '" + name + "' (RT, N, TH)");
            }
        }
    } else if (is_cyl) {
        cfg.kinds = {ElementKind::N};
        cfg.defaults.push_back({"element.kind", "N", "paper"});
    } else {
        fail("missing 'element.kind'");
    }
    if (el.contains("k")) {
        cfg.k = get_int(el["k"], "element.k");
    } else if (is_cyl) {
        cfg.k = 3;
        cfg.defaults.push_back({"element.k", "3", "paper"});
    } else {
        fail("missing 'element.k'");
    }
    if (cfg.k < 1 || cfg.k > 6) {
        fail("element.k must lie in [1, 6]");
    }
    if (el.contains("alpha")) {
        cfg.alpha = get_int(el["alpha"], "element.alpha");
        if (cfg.alpha < 0 || cfg.alpha > cfg.k - 1) {
            fail("element.alpha must lie in [0, k-1]");
        }
    } else {
        cfg.defaults.push_back({"element.alpha", std::to_string(cfg.k - 1), "artifact default"});
    }

    // params
    const json pr = root.value("params", json::object());
    check_keys(pr, "params",
               {"mu", "gamma", "gamma_factor", "m", "theta", "stabilized", "quad_order", "error_quad_order", "mesh_size"});
    if (pr.contains("mu")) {
        cfg.mu = get_number(pr["mu"], "params.mu");
        if (!(cfg.mu > 0.0)) {
            fail("params.mu must be positive");
        }
    } else {
        cfg.defaults.push_back({"params.mu", "1", "paper"});
    }
    if (pr.contains("gamma") && pr.contains("gamma_factor")) {
        fail("params: give either gamma or gamma_factor, not both");
    }
    if (pr.contains("gamma")) {
        cfg.gamma = get_number(pr["gamma"], "params.gamma");
        if (!(*cfg.gamma > 0.0)) {
            fail("params.gamma must be positive");
        }
    } else if (pr.contains("gamma_factor")) {
        cfg.gamma_factor = get_number(pr["gamma_factor"], "params.gamma_factor");
        if (!(cfg.gamma_factor > 0.0)) {
            fail("params.gamma_factor must be positive");
        }
    } else if (is_cont) {
        cfg.gamma = 1.0;
        cfg.defaults.push_back({"params.gamma", "1", "paper"});
    } else {
        cfg.defaults.push_back({"params.gamma_factor", "10", "paper"});
    }
    if (pr.contains("m")) {
        cfg.m = get_int(pr["m"], "params.m");
        if (cfg.m != 0 && cfg.m != 1) {
            fail("params.m must be 0 or 1");
        }
    } else {
        cfg.defaults.push_back({"params.m", "0", "artifact default"});
    }
    if (pr.contains("theta")) {
        cfg.theta = get_number(pr["theta"], "params.theta");
        if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) {
            fail("params.theta must lie in (0, 1]");
        }
    } else {
        cfg.defaults.push_back({"params.theta", "1", "paper"});
    }
    if (pr.contains("stabilized")) {
        const json& sj = pr["stabilized"];
        const json list = sj.is_array() ? sj : json::array({sj});
        if (list.empty()) {
            fail("params.stabilized: empty list");
        }
        cfg.stabilized.clear();
        for (const json& b : list) {
            cfg.stabilized.push_back(get_bool(b, "params.stabilized"));
        }
    }
    const auto order = [&](const char* key, int& dst, int dflt) {
        if (pr.contains(key)) {
            dst = get_int(pr[key], std::string("params.") + key);
            if (dst < 1 || dst > 30) {
                fail(std::string("params.") + key + " must lie in [1, 30]");
            }
        } else {
            cfg.defaults.push_back({std::string("params.") + key, std::to_string(dflt), "artifact default"});
        }
    };
    order("quad_order", cfg.quad_order, cfg.k + 3);
    order("error_quad_order", cfg.error_quad_order, cfg.k + 4);
    if (pr.contains("mesh_size")) {
        const std::string ms = get_string(pr["mesh_size"], "params.mesh_size");
        if (ms == "edge") {
            cfg.mesh_size = MeshSize::edge;
        } else if (ms == "diameter") {
            cfg.mesh_size = MeshSize::diameter;
        } else {
            fail("params.mesh_size must be 'edge' or 'diameter'");
        }
    } else {
        cfg.defaults.push_back({"params.mesh_size", "edge", "artifact default"});
    }
    if ((is_solve || is_cyl) && (cfg.kinds.size() != 1 || cfg.stabilized.size() != 1)) {
        fail(subcommand + " takes a single element kind and a single stabilized flag");
    }

    // geometry
    if (is_solve || is_conv || is_infsup) {
        if (!root.contains("geometry")) {
            fail("missing 'geometry'");
        }
        cfg.domain = parse_geometry(root["geometry"], cfg);
    } else if (is_cont) {
        cfg.geometry = "rectangle";
    } else {
        cfg.geometry = "cylinder";
        cfg.domain = cylinder_domain();
    }

    // case
    if (is_solve || is_conv) {
        if (!root.contains("case")) {
            fail("missing 'case'");
        }
        const json& c = root["case"];
        if (c.is_string()) {
            const std::string name = c.get<std::string>();
            if (name == "pentagon") {
                // Analytic mean over the configured domain by the cut quadrature itself.
                const ManufacturedCase raw = pentagon_case(cfg.mu, 0.0);
                const double area = integrate(cfg.domain, 64, 8, [](const Vec2&) { return 1.0; });
                const double pm = integrate(cfg.domain, 64, 8, raw.p) / area;
                cfg.mcase = pentagon_case(cfg.mu, pm);
            } else if (name == "circle_square") {
                cfg.mcase = circle_case(cfg.mu);
            } else if (name == "patch") {
                cfg.mcase = patch_case(cfg.mu);
            } else {
                fail("case: unknown case '" + name + "' (pentagon, circle_square, patch, or {\"custom\": ...})");
            }
        } else {
            check_keys(c, "case", {"custom"});
            if (!c.contains("custom")) {
                fail("case: expected a case name or {\"custom\": ...}");
            }
            const json& cu = c["custom"];
            check_keys(cu, "case.custom", {"u_x", "u_y", "p"});
            if (!cu.contains("u_x") || !cu.contains("u_y") || !cu.contains("p")) {
                fail("case.custom needs u_x, u_y and p");
            }
            cfg.mcase = polynomial_case(cfg.mu, get_poly(cu["u_x"], "case.custom.u_x"), get_poly(cu["u_y"], "case.custom.u_y"),
                                        get_poly(cu["p"], "case.custom.p"));
        }
    }

    // levels, eps, mesh
    if (is_conv || is_infsup || is_cont) {
        if (root.contains("levels")) {
            cfg.levels = parse_levels(root["levels"], "levels");
        } else {
            cfg.levels = is_infsup ? std::vector<int>{1, 2, 3, 4} : is_conv ? std::vector<int>{2, 3, 4, 5} : std::vector<int>{3};
            cfg.defaults.push_back({"levels", join_levels(cfg.levels), is_infsup ? "paper" : "artifact default"});
        }
        if (is_conv) {
            if (cfg.levels.size() < 3) {
                fail("levels: a convergence study needs at least three levels");
            }
            for (std::size_t i = 1; i < cfg.levels.size(); ++i) {
                if (cfg.levels[i] != cfg.levels[i - 1] + 1) {
                    fail("levels: convergence levels must be consecutive (h halves per row)");
                }
            }
        }
    }
    if (is_cont) {
        if (root.contains("eps")) {
            const json& e = root["eps"];
            if (!e.is_array() || e.empty()) {
                fail("eps: expected a non-empty list");
            }
            for (const json& x : e) {
                const double v = get_number(x, "eps");
                if (v < 0.0 || v >= 0.25) {
                    fail("eps values must lie in [0, 0.25)");
                }
                cfg.eps.push_back(v);
            }
        } else {
            cfg.eps = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
            cfg.defaults.push_back({"eps", "[1e-2, 1e-4, 1e-6, 1e-8, 1e-10]", "artifact default"});
        }
    }
    if (is_solve) {
        if (!root.contains("mesh")) {
            fail("missing 'mesh'");
        }
        const auto g = get_grid(root["mesh"], "mesh");
        cfg.nx = g[0];
        cfg.ny = g[1];
    }
    if (is_cyl) {
        if (root.contains("mesh")) {
            const auto g = get_grid(root["mesh"], "mesh");
            cfg.nx = g[0];
            cfg.ny = g[1];
        } else {
            cfg.nx = 64;
            cfg.ny = 16;
            cfg.defaults.push_back({"mesh", "[64, 16]", "artifact default"});
        }
        if (root.contains("raster")) {
            const auto g = get_grid(root["raster"], "raster");
            cfg.raster_nx = g[0];
            cfg.raster_ny = g[1];
        } else {
            cfg.raster_nx = 220;
            cfg.raster_ny = 41;
            cfg.defaults.push_back({"raster", "[220, 41]", "artifact default"});
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& subcommand)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail("cannot read config '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), subcommand);
}

int requested_threads()
{
    const char* env = std::getenv("TRIMSTOKES_THREADS");
    if (env == nullptr || *env == '\0') {
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    int n = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [p, ec] = std::from_chars(env, end, n);
    if (ec != std::errc() || p != end || n < 1) {
        fail(std::string("TRIMSTOKES_THREADS must be a positive integer, got '") + env + "'");
    }
    return n;
}

namespace {

struct Writer {
    fs::path dir;

    std::ofstream open(const std::string& name) const
    {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) {
            throw Error("cannot write " + (dir / name).string());
        }
        return f;
    }
};

std::string variant_tag(ElementKind kind, bool stab)
{
    return to_string(kind) + (stab ? "_stabilized" : "_nonstabilized");
}

void dump_quadrature(const Writer& w, const std::string& tag, const TrimmedMesh& mesh)
{
    std::ofstream f = w.open(tag + "_quadrature.csv");
    f << "element,rule,x,y,w\n";
    for (Index e = 0; e < mesh.size(); ++e) {
        const MeshElement& el = mesh.element(e);
        if (!el.active()) {
            continue;
        }
        for (std::size_t q = 0; q < el.volume.size(); ++q) {
            f << e << ",volume," << fmt(el.volume.points[q].x()) << ',' << fmt(el.volume.points[q].y()) << ','
              << fmt(el.volume.weights[q]) << '\n';
        }
        for (const BoundaryRule& br : el.boundary) {
            for (std::size_t q = 0; q < br.size(); ++q) {
                f << e << ",boundary," << fmt(br.points[q].x()) << ',' << fmt(br.points[q].y()) << ','
                  << fmt(br.weights[q]) << '\n';
            }
        }
    }
}

void dump_matrices(const Writer& w, const std::string& tag, const Discretization& disc, const FormParams& form,
                   const ProblemData& data)
{
    const AssembledSystem sys = assemble(disc.mesh, disc.spaces, disc.stab, form, data);
    const NormMatrices nm = assemble_norm_matrices(disc.mesh, disc.spaces, disc.stab, form.mu, disc.stabilized);
    const SaddleSystem s = saddle_system(sys, needs_mean_border(disc.mesh));
    const auto path = [&](const char* name) { return (w.dir / (tag + "_" + name + ".mtx")).string(); };
    write_matrix_market(sys.A, path("A"));
    write_matrix_market(sys.B1, path("B1"));
    write_matrix_market(sys.Bm, path("Bm"));
    write_matrix_market(s.K, path("K"));
    write_matrix_market(SparseMatrix(s.rhs.sparseView()), path("rhs"));
    write_matrix_market(nm.Nv, path("Nv"));
    write_matrix_market(nm.Mp, path("Mp"));
}

void dumps(const Writer& w, const RunOptions& ro, const std::string& tag, const TrimmedDomain& domain, Index nx, Index ny,
           const SolverOptions& opt, const VectorField& u_D, const ProblemData& data)
{
    if (!ro.dump_matrices && !ro.dump_quadrature) {
        return;
    }
    const Discretization disc = discretize(domain, nx, ny, opt, u_D);
    if (ro.dump_quadrature) {
        dump_quadrature(w, tag, disc.mesh);
    }
    if (ro.dump_matrices) {
        dump_matrices(w, tag, disc, opt.form, data);
    }
}

json run_json(const CaseRun& r)
{
    json j;
    j["nx"] = r.nx;
    j["ny"] = r.ny;
    j["velocity_unknowns"] = r.velocity_unknowns;
    j["pressure_unknowns"] = r.pressure_unknowns;
    j["active_elements"] = r.active_elements;
    j["bad_elements"] = r.bad_elements;
    j["residual"] = r.residual;
    j["mean_constraint"] = r.mean_border;
    j["e1h"] = r.errors.e1h;
    j["e0h"] = r.errors.e0h;
    j["ediv"] = r.errors.ediv;
    return j;
}

int run_solve(const ExperimentConfig& cfg, const RunOptions& ro, const Writer& w, json& meta, std::ostream& log)
{
    const ElementKind kind = cfg.kinds[0];
    const SolverOptions opt = cfg.solver_options(kind, cfg.stabilized[0]);
    const ManufacturedCase& mc = *cfg.mcase;
    dumps(w, ro, variant_tag(kind, cfg.stabilized[0]), cfg.domain, cfg.nx, cfg.ny, opt, mc.u, mc.data());
    const Discretization disc = discretize(cfg.domain, cfg.nx, cfg.ny, opt, mc.u);
    const Solution sol = solve(disc, opt.form, mc.data());
    const CaseRun r = measure_case(disc, sol, opt, mc);
    {
        std::ofstream f = w.open("solution_u.csv");
        f << "dof,value\n";
        for (Index i = 0; i < sol.u.size(); ++i) {
            f << i << ',' << fmt(sol.u(i)) << '\n';
        }
    }
    {
        std::ofstream f = w.open("solution_p.csv");
        f << "dof,value\n";
        for (Index i = 0; i < sol.p.size(); ++i) {
            f << i << ',' << fmt(sol.p(i)) << '\n';
        }
    }
    {
        std::ofstream f = w.open("errors.csv");
        f << "e1h,e0h,ediv\n" << fmt(r.errors.e1h) << ',' << fmt(r.errors.e0h) << ',' << fmt(r.errors.ediv) << '\n';
    }
    json j = run_json(r);
    j["element"] = to_string(kind);
    j["stabilized"] = cfg.stabilized[0];
    j["case"] = mc.name;
    meta["runs"].push_back(j);
    meta["errors"] = {{"e1h", r.errors.e1h}, {"e0h", r.errors.e0h}, {"ediv", r.errors.ediv}};
    log << to_string(kind) << ": e1h " << r.errors.e1h << ", e0h " << r.errors.e0h << ", ediv " << r.errors.ediv
        << ", residual " << r.residual << '\n';
    return 0;
}

int run_convergence(const ExperimentConfig& cfg, const RunOptions& ro, const Writer& w, json& meta, std::ostream& log)
{
    int status = 0;
    const ManufacturedCase& mc = *cfg.mcase;
    for (ElementKind kind : cfg.kinds) {
        for (bool stab : cfg.stabilized) {
            const std::string tag = variant_tag(kind, stab);
            const SolverOptions opt = cfg.solver_options(kind, stab);
            ConvergenceTable t;
            json j;
            j["element"] = to_string(kind);
            j["stabilized"] = stab;
            j["case"] = mc.name;
            j["levels"] = json::array();
            for (int l : cfg.levels) {
                const Index n = Index(1) << l;
                try {
                    dumps(w, ro, tag + "_l" + std::to_string(l), cfg.domain, n, n, opt, mc.u, mc.data());
                    ConvergenceRow row;
                    row.h = 1.0 / static_cast<double>(n);
                    row.run = run_case(cfg.domain, n, n, opt, mc);
                    t.rows.push_back(row);
                    json lj = run_json(row.run);
                    lj["level"] = l;
                    lj["h"] = row.h;
                    j["levels"].push_back(lj);
                } catch (const SolverFault& e) {
                    j["error"] = "level " + std::to_string(l) + ": " + e.what();
                    log << tag << ": level " << l << " failed: " << e.what() << '\n';
                    status = 2;
                    break;
                }
            }
            {
                std::ofstream f = w.open("convergence_" + tag + ".csv");
                f << "h,e1h,e0h,ediv\n";
                for (const ConvergenceRow& r : t.rows) {
                    f << fmt(r.h) << ',' << fmt(r.run.errors.e1h) << ',' << fmt(r.run.errors.e0h) << ','
                      << fmt(r.run.errors.ediv) << '\n';
                }
            }
            if (t.rows.size() >= 3) {
                fit_slopes(t);
                std::ofstream f = w.open("convergence_" + tag + "_slopes.csv");
                f << "quantity,slope\n";
                f << "e1h," << fmt(t.slope_e1h) << "\ne0h," << fmt(t.slope_e0h) << "\ncombined,"
                  << fmt(t.slope_combined) << "\nediv," << fmt(t.slope_div) << '\n';
                j["slopes"] = {{"e1h", t.slope_e1h},
                               {"e0h", t.slope_e0h},
                               {"combined", t.slope_combined},
                               {"ediv", t.slope_div}};
                log << tag << ": combined slope " << t.slope_combined << " (e1h " << t.slope_e1h << ", e0h "
                    << t.slope_e0h << ")\n";
            }
            meta["runs"].push_back(j);
        }
    }
    return status;
}

int run_infsup(const ExperimentConfig& cfg, const RunOptions& ro, const Writer& w, json& meta, std::ostream& log)
{
    int status = 0;
    for (ElementKind kind : cfg.kinds) {
        for (bool stab : cfg.stabilized) {
            const std::string tag = variant_tag(kind, stab);
            const SolverOptions opt = cfg.solver_options(kind, stab);
            for (int l : cfg.levels) {
                const Index n = Index(1) << l;
                dumps(w, ro, tag + "_l" + std::to_string(l), cfg.domain, n, n, opt, nullptr, ProblemData{});
            }
            const std::vector<InfSupRow> rows = infsup_table(cfg.domain, opt, cfg.levels);
            json j;
            j["element"] = to_string(kind);
            j["stabilized"] = stab;
            j["levels"] = json::array();
            std::ofstream f = w.open("infsup_" + tag + ".csv");
            f << "h,beta0,beta1\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const InfSupRow& r = rows[i];
                json lj;
                lj["level"] = cfg.levels[i];
                lj["h"] = r.h;
                if (r.error.empty()) {
                    f << fmt(r.h) << ',' << fmt(r.beta0) << ',' << fmt(r.beta1) << '\n';
                    lj["beta0"] = r.beta0;
                    lj["beta1"] = r.beta1;
                    lj["pressure_unknowns"] = r.pressure_unknowns;
                    lj["bad_elements"] = r.bad_elements;
                    log << tag << " h=" << r.h << ": beta0 " << r.beta0 << ", beta1 " << r.beta1 << '\n';
                } else {
                    f << fmt(r.h) << ",nan,nan\n";
                    lj["error"] = r.error;
                    log << tag << " h=" << r.h << " failed: " << r.error << '\n';
                    status = 2;
                }
                j["levels"].push_back(lj);
            }
            meta["runs"].push_back(j);
        }
    }
    return status;
}

int run_continuity(const ExperimentConfig& cfg, const RunOptions& ro, const Writer& w, json& meta, std::ostream& log)
{
    int status = 0;
    for (ElementKind kind : cfg.kinds) {
        for (bool stab : cfg.stabilized) {
            const std::string tag = variant_tag(kind, stab);
            const SolverOptions opt = cfg.solver_options(kind, stab);
            json j;
            j["element"] = to_string(kind);
            j["stabilized"] = stab;
            std::ofstream f = w.open("continuity_" + tag + ".csv");
            f << "eps,h,lambda_max\n";
            j["rows"] = json::array();
            for (double eps : cfg.eps) {
                for (int l : cfg.levels) {
                    const Index n = Index(1) << l;
                    char etag[32];
                    std::snprintf(etag, sizeof etag, "_eps%g_l%d", eps, l);
                    dumps(w, ro, tag + etag, rectangle_domain(eps, BCTag::dirichlet_weak), n, n, opt, nullptr,
                          ProblemData{});
                }
                try {
                    for (const ContinuityRow& r : continuity_sweep(opt, {eps}, cfg.levels)) {
                        f << fmt(r.eps) << ',' << fmt(r.h) << ',' << fmt(r.lambda_max) << '\n';
                        j["rows"].push_back({{"eps", r.eps}, {"h", r.h}, {"lambda_max", r.lambda_max}});
                        log << tag << " eps=" << r.eps << " h=" << r.h << ": lambda_max " << r.lambda_max << '\n';
                    }
                } catch (const SolverFault& e) {
                    j["rows"].push_back({{"eps", eps}, {"error", e.what()}});
                    log << tag << " eps=" << eps << " failed: " << e.what() << '\n';
                    status = 2;
                }
            }
            meta["runs"].push_back(j);
        }
    }
    return status;
}

int run_cylinder(const ExperimentConfig& cfg, const RunOptions& ro, const Writer& w, json& meta, std::ostream& log)
{
    const ElementKind kind = cfg.kinds[0];
    const SolverOptions opt = cfg.solver_options(kind, cfg.stabilized[0]);
    ProblemData data;
    data.u_D = cylinder_velocity_data();
    dumps(w, ro, variant_tag(kind, cfg.stabilized[0]), cfg.domain, cfg.nx, cfg.ny, opt, data.u_D, data);
    const CylinderResult r = cylinder_demo(opt, cfg.nx, cfg.ny, cfg.raster_nx, cfg.raster_ny);
    {
        std::ofstream f = w.open("cylinder_raster.csv");
        f << "x,y,speed,p\n";
        for (const auto& s : r.raster) {
            f << fmt(s[0]) << ',' << fmt(s[1]) << ',' << fmt(s[2]) << ',' << fmt(s[3]) << '\n';
        }
    }
    {
        std::ofstream f = w.open("cylinder_summary.csv");
        f << "quantity,value\n";
        f << "max_speed," << fmt(r.max_speed) << "\nmin_speed," << fmt(r.min_speed) << "\nmax_pressure,"
          << fmt(r.max_pressure) << "\nmin_pressure," << fmt(r.min_pressure) << "\ninflow," << fmt(r.inflow)
          << "\nimbalance," << fmt(r.imbalance) << '\n';
    }
    json j;
    j["element"] = to_string(kind);
    j["stabilized"] = cfg.stabilized[0];
    j["nx"] = r.run.nx;
    j["ny"] = r.run.ny;
    j["velocity_unknowns"] = r.run.velocity_unknowns;
    j["pressure_unknowns"] = r.run.pressure_unknowns;
    j["active_elements"] = r.run.active_elements;
    j["bad_elements"] = r.run.bad_elements;
    j["residual"] = r.run.residual;
    j["max_speed"] = r.max_speed;
    j["min_speed"] = r.min_speed;
    j["max_pressure"] = r.max_pressure;
    j["min_pressure"] = r.min_pressure;
    j["inflow"] = r.inflow;
    j["imbalance"] = r.imbalance;
    meta["runs"].push_back(j);
    log << "cylinder: max|u| " << r.max_speed << ", inflow " << r.inflow << ", imbalance " << r.imbalance << '\n';
    return 0;
}

} // namespace

int run_experiment(const ExperimentConfig& cfg, const RunOptions& ro, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = !ro.out_dir.empty() ? fs::path(ro.out_dir)
                         : !cfg.output.empty() ? fs::path(cfg.output)
                                               : fs::path("out") / cfg.subcommand;
    fs::create_directories(dir);
    const Writer w{dir};

    json meta;
    meta["subcommand"] = cfg.subcommand;
    meta["config"] = json::parse(cfg.echo);
    meta["geometry"] = cfg.geometry;
    meta["defaults"] = json::array();
    for (const DefaultUse& d : cfg.defaults) {
        meta["defaults"].push_back({{"key", d.key}, {"value", d.value}, {"source", d.source}});
    }
    meta["gamma"] = cfg.penalty();
    meta["quad_order"] = cfg.quad_order > 0 ? cfg.quad_order : cfg.k + 3;
    meta["error_quad_order"] = cfg.error_quad_order > 0 ? cfg.error_quad_order : cfg.k + 4;
    meta["mesh_size"] = cfg.mesh_size == MeshSize::edge ? "edge" : "diameter";
    meta["threads"] = {{"requested", ro.threads}, {"used", 1}};
    json notes = json::array();
    const bool has_th = std::find(cfg.kinds.begin(), cfg.kinds.end(), ElementKind::TH) != cfg.kinds.end();
    if (has_th && cfg.domain.map.kind() != GeometryMap::Kind::identity) {
        notes.push_back("TH on a non-identity map: empirically supported, not covered by theory");
    }
    if (cfg.subcommand == "solve" || cfg.subcommand == "convergence") {
        notes.push_back("pressure error: the mean of p - p_h is subtracted when there is no Neumann boundary; "
                        "the discrete pressure then carries a zero-mean constraint");
    }
    meta["notes"] = notes;
    meta["runs"] = json::array();

    int status = 0;
    try {
        if (cfg.subcommand == "solve") {
            status = run_solve(cfg, ro, w, meta, log);
        } else if (cfg.subcommand == "convergence") {
            status = run_convergence(cfg, ro, w, meta, log);
        } else if (cfg.subcommand == "infsup") {
            status = run_infsup(cfg, ro, w, meta, log);
        } else if (cfg.subcommand == "continuity") {
            status = run_continuity(cfg, ro, w, meta, log);
        } else {
            status = run_cylinder(cfg, ro, w, meta, log);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Geometry, mesh and solver faults at run time all end the run as a solver fault.
        meta["error"] = e.what();
        log << "error: " << e.what() << '\n';
        status = 2;
    }

    meta["exit_code"] = status;
    meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream f = w.open("metadata.json");
    f << meta.dump(2) << '\n';
    return status;
}

} // namespace trimstokes
