#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "fellerstop/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"feller-stop: penalty-method optimal stopping solver"};
    app.require_subcommand(1);
    app.fallthrough(true); // global flags may follow the subcommand

    fellerstop::CliOptions opts;
    std::uint64_t seed = 0;
    std::size_t grid_n = 0;
    app.add_option("--seed", seed, "override the Monte Carlo seed")
        ->each([&](const std::string&) { opts.seed = seed; });
    app.add_option("--grid-n", grid_n, "override the spatial grid size")
        ->each([&](const std::string&) { opts.grid_n = grid_n; });
    app.add_flag("--quiet", opts.quiet, "suppress informational output");

    std::string config_path;
    std::string figure_name;
    std::string out_dir;

    CLI::App* solve = app.add_subcommand("solve", "solve a stopping problem from a config");
    solve->add_option("config", config_path, "experiment config JSON")->required();

    CLI::App* figure = app.add_subcommand("figure", "emit figure data files");
    figure->add_option("name", figure_name, "jump_boundary_fig | regime_fig")->required();
    figure->add_option("--out", out_dir, "output directory");

    CLI::App* crosscheck =
        app.add_subcommand("crosscheck", "run solver/analytic/MC agreement checks");
    crosscheck->add_option("config", config_path, "experiment config JSON")->required();

    CLI::App* validate = app.add_subcommand("validate", "validate a config file");
    validate->add_option("config", config_path, "experiment config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return fellerstop::cmd_solve(config_path, opts);
    if (figure->parsed()) return fellerstop::cmd_figure(figure_name, out_dir, opts);
    if (crosscheck->parsed()) return fellerstop::cmd_crosscheck(config_path, opts);
    return fellerstop::cmd_validate(config_path, opts);
}
