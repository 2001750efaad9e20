#pragma once

// Experiment configs (strict JSON) and the driver behind the `trimstokes`
// command: one subcommand per analysis driver, CSV tables plus a metadata
// file per run.

#include "trimstokes/analysis.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace trimstokes {

/// A default the config did not override, with where its value comes from.
struct DefaultUse {
    std::string key;
    std::string value;
    std::string source;  ///< "paper" or "artifact default"
};

struct ExperimentConfig {
    std::string subcommand;
    std::string geometry;  ///< preset name or "custom"
    TrimmedDomain domain;
    std::vector<ElementKind> kinds;
    int k = 2;
    int alpha = -1;
    std::vector<bool> stabilized{true};
    double mu = 1.0;
    std::optional<double> gamma;  ///< explicit penalty, else gamma_factor (k+1)^2
    double gamma_factor = 10.0;
    int m = 0;
    double theta = 1.0;
    int quad_order = 0;
    int error_quad_order = 0;
    MeshSize mesh_size = MeshSize::edge;
    std::vector<int> levels;
    std::vector<double> eps;
    Index nx = 0;
    Index ny = 0;
    Index raster_nx = 0;
    Index raster_ny = 0;
    std::optional<ManufacturedCase> mcase;
    std::string output;
    std::string echo;  ///< the config as parsed, re-serialized
    std::vector<DefaultUse> defaults;

    double penalty() const { return gamma ? *gamma : gamma_factor * (k + 1) * (k + 1); }
    SolverOptions solver_options(ElementKind kind, bool stab) const;
};

/// Parse and validate a config for `subcommand`. Unknown keys, wrong types
/// and out-of-range values throw ConfigError; malformed JSON reports the
/// byte offset.
ExperimentConfig parse_config(const std::string& text, const std::string& subcommand);
ExperimentConfig load_config(const std::string& path, const std::string& subcommand);

struct RunOptions {
    std::string out_dir;  ///< overrides the config's "output"
    bool dump_matrices = false;
    bool dump_quadrature = false;
    int threads = 1;
};

/// Threads requested through TRIMSTOKES_THREADS (hardware count when unset).
/// Throws ConfigError on a malformed value.
int requested_threads();

/// Run one experiment. Returns 0 on success and 2 when a level hit a solver
/// fault; the artifacts of completed levels are written either way.
int run_experiment(const ExperimentConfig& cfg, const RunOptions& ro, std::ostream& log);

/// Polynomial manufactured case: terms are (c, i, j) for c x^i y^j.
using PolyTerms = std::vector<std::array<double, 3>>;
ManufacturedCase polynomial_case(double mu, const PolyTerms& ux, const PolyTerms& uy, const PolyTerms& p);

} // namespace trimstokes
