// trimstokes <subcommand> --config <file> [--out <dir>] [--dump-matrices] [--dump-quadrature]
//
// Exit codes: 0 success, 2 solver fault, 3 config error.

#include "trimstokes/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Args {
    std::string config;
    std::string out;
    bool dump_matrices = false;
    bool dump_quadrature = false;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stokes flow on trimmed isogeometric patches"};
    app.require_subcommand(1);
    Args args;
    const std::vector<std::pair<const char*, const char*>> subs{
        {"solve", "solve one manufactured case and report its errors"},
        {"convergence", "error table and slopes over mesh levels"},
        {"infsup", "discrete inf-sup constants beta_0 and beta_1 per level"},
        {"continuity", "largest eigenvalue of a_h against the (1,h) norm over an eps sweep"},
        {"cylinder", "flow around a cylinder in a channel"},
    };
    for (const auto& [name, help] : subs) {
        CLI::App* sc = app.add_subcommand(name, help);
        sc->add_option("--config", args.config, "JSON experiment config")->required();
        sc->add_option("--out", args.out, "output directory (overrides the config)");
        sc->add_flag("--dump-matrices", args.dump_matrices, "write system and norm matrices (MatrixMarket)");
        sc->add_flag("--dump-quadrature", args.dump_quadrature, "write quadrature rules as CSV");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        trimstokes::RunOptions ro;
        ro.out_dir = args.out;
        ro.dump_matrices = args.dump_matrices;
        ro.dump_quadrature = args.dump_quadrature;
        ro.threads = trimstokes::requested_threads();
        const trimstokes::ExperimentConfig cfg = trimstokes::load_config(args.config, sub);
        return trimstokes::run_experiment(cfg, ro, std::cout);
    } catch (const trimstokes::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 3;
    } catch (const trimstokes::Error& e) {
        std::cerr << "solver fault: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
