// Config-driven experiment runner for simultaneous Pade-Faber approximation.
//
//   padefaber validate --config cfg.json
//   padefaber run      --config cfg.json --out DIR [--jobs N] [--dry-run] [--verbose]
//   padefaber report   --config cfg.json --out DIR
//
// `run` writes records.csv (one row per (n, component)), summary.json with
// fitted rates and theoretical bounds, and an echo of the effective config.
// `report` refits the rates from an existing records.csv without recomputing
// the row sequence.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "padefaber/padefaber.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string default_out_dir() {
    if (const char* env = std::getenv("PADEFABER_OUT_DIR")) return env;
    return "out";
}

void print_plan(const padefaber::ExperimentConfig& cfg, std::ostream& os) {
    const auto profile = padefaber::pole_profile(cfg.functions, cfg.m);
    os << "geometry: " << padefaber::to_string(cfg.geometry.kind()) << "\n"
       << "components: " << cfg.functions.dimension() << ", |m| = " << cfg.m.total() << "\n"
       << "row: n = " << cfg.n_start << " .. "
       << (cfg.n_end ? std::to_string(*cfg.n_end) : std::string("(until error floor)")) << "\n"
       << "quadrature: rho = " << padefaber::resolve_quadrature_rho(cfg.functions, cfg.quad)
       << ", N = " << cfg.quad.N << ", residual buffer = " << cfg.quad.residual_buffer << "\n"
       << "profile: rho_m = ";
    if (std::isfinite(profile.rho_m)) {
        os << profile.rho_m;
    } else {
        os << "inf (superlinear regime)";
    }
    os << ", L = " << profile.L << ", poles in domain = " << profile.poles.size() << "\n";
    for (const auto& grid : cfg.grids) {
        os << "grid '" << grid.name << "': " << grid.samples.size() << " points, ||Phi||_K = " << grid.phi_sup
           << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simultaneous Pade-Faber approximation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = default_out_dir();
    int jobs = 1;
    bool verbose = false;
    bool dry_run = false;

    auto* validate = app.add_subcommand("validate", "parse and validate a config");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required();

    auto* run = app.add_subcommand("run", "run the experiment and write reports");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (default $PADEFABER_OUT_DIR or ./out)");
    run->add_option("--jobs", jobs, "parallel row workers")->check(CLI::PositiveNumber);
    run->add_flag("--dry-run", dry_run, "validate and print the plan without computing");
    run->add_flag("--verbose", verbose, "progress output");

    auto* report = app.add_subcommand("report", "re-fit rates from an existing records.csv");
    report->add_option("--config", config_path, "experiment config (JSON)")->required();
    report->add_option("--out", out_dir, "directory holding records.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        const padefaber::ExperimentConfig cfg = padefaber::parse_config(read_file(config_path));

        if (validate->parsed()) {
            print_plan(cfg, std::cout);
            std::cout << "config ok\n";
            return 0;
        }
        if (run->parsed()) {
            if (dry_run) {
                print_plan(cfg, std::cout);
                std::cout << "dry run: no outputs written\n";
                return 0;
            }
            const auto result = padefaber::run_experiment(cfg, out_dir, jobs, verbose, &std::cout);
            return result.exit_code;
        }
        if (report->parsed()) {
            padefaber::refit_report(cfg, out_dir);
            std::cout << "wrote " << out_dir << "/report.json\n";
            return 0;
        }
    } catch (const padefaber::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
