// magconf: charged-particle confinement simulations from scenario files.

#include <iostream>

#include <CLI11.hpp>

#include "magconf/commands.hpp"

int main(int argc, char** argv)
{
    using namespace magconf;

    CLI::App app{"Charged particles in planar domains with boundary-singular magnetic fields"};
    app.require_subcommand(1);

    CommandOptions options;
    std::uint64_t seed = 0;
    std::size_t particles = 0;
    bool serial = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", options.scenario, "scenario JSON file (schema magconf-scenario/1)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", options.out, "output directory (default magconf-out/<name>)");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--particles", particles, "override the number of particles");
        sub->add_flag("--quiet", options.quiet, "only report errors");
        sub->add_flag("--serial", serial, "run particles on one thread");
    };

    auto* simulate = app.add_subcommand("simulate", "integrate all particles; write CSVs and report.json");
    auto* check = app.add_subcommand("check", "test the collar hypotheses; write check.json");
    auto* verify = app.add_subcommand("verify", "simulate (or read CSVs) and check the bounds; write verify.json");
    auto* plot = app.add_subcommand("plot", "draw trajectories from CSVs; write plot.svg");
    for (auto* sub : {simulate, check, verify, plot})
        add_common(sub);
    verify->add_option("csv", options.inputs, "trajectory CSVs to verify instead of simulating");
    plot->add_option("csv", options.inputs, "trajectory CSVs (default: particle_*.csv in the output directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_scenario_error;
    }

    for (auto* sub : {simulate, check, verify, plot}) {
        if (sub->count("--seed"))
            options.seed = seed;
        if (sub->count("--particles"))
            options.particles = particles;
    }
    options.exec = serial ? Execution::serial : Execution::parallel;

    if (simulate->parsed())
        return run_simulate(options, std::cout, std::cerr);
    if (check->parsed())
        return run_check(options, std::cout, std::cerr);
    if (verify->parsed())
        return run_verify(options, std::cout, std::cerr);
    return run_plot(options, std::cout, std::cerr);
}
