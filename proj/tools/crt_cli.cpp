#include "crt/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Simulate Brownian continuum random trees and their deformed metrics."};
    app.require_subcommand(1);

    std::string config_path;
    crt::RunConfig flags;
    app.add_option("--config", config_path, "JSON file with RunConfig keys; flags override it");
    auto* alpha = app.add_option("--alpha", flags.alpha, "scale ratio in (0, 1)");
    auto* eta = app.add_option("--eta-exponent", flags.eta_exponent, "eta = alpha^eta_exponent");
    auto* p = app.add_option("--p", flags.p, "moment exponent in (1, 2)");
    auto* zeta = app.add_option("--zeta", flags.zeta, "ball-volume slack exponent");
    auto* grid = app.add_option("--grid-size", flags.grid_size, "grid steps per side");
    auto* horizon = app.add_option("--horizon", flags.horizon, "time horizon per side");
    auto* n_max = app.add_option("--n-max", flags.n_max, "deepest net level");
    auto* cap = app.add_option("--carrier-cap", flags.carrier_cap, "carrier subsample size (0 keeps all)");
    auto* replicas = app.add_option("--replicas", flags.replicas, "independent replicas");
    auto* seed = app.add_option("--seed", flags.master_seed, "master seed");
    auto* out = app.add_option("--out", flags.output_dir, "output directory");

    std::string lemma = "all";
    for (const char* name : {"simulate", "nets", "weights", "deform", "dimension", "all"})
        app.add_subcommand(name, std::string("run the ") + name + " stage")->fallthrough();
    auto* verify = app.add_subcommand("verify", "check a lemma numerically")->fallthrough();
    verify->add_option("lemma", lemma, "verification name or 'all'")
        ->check(CLI::IsMember([] {
            auto v = crt::verify_names();
            v.push_back("all");
            return v;
        }()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? crt::exit_ok : crt::exit_invalid_config;
    }

    crt::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = crt::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return crt::exit_invalid_config;
    }
    if (*alpha) cfg.alpha = flags.alpha;
    if (*eta) cfg.eta_exponent = flags.eta_exponent;
    if (*p) cfg.p = flags.p;
    if (*zeta) cfg.zeta = flags.zeta;
    if (*grid) cfg.grid_size = flags.grid_size;
    if (*horizon) cfg.horizon = flags.horizon;
    if (*n_max) cfg.n_max = flags.n_max;
    if (*cap) cfg.carrier_cap = flags.carrier_cap;
    if (*replicas) cfg.replicas = flags.replicas;
    if (*seed) cfg.master_seed = flags.master_seed;
    if (*out) cfg.output_dir = flags.output_dir;

    const auto command = app.get_subcommands().front()->get_name();
    return crt::run_command(command, lemma, cfg, std::cerr);
}
