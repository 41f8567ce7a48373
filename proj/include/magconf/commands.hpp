#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magconf/bounds.hpp"
#include "magconf/scenario.hpp"

namespace magconf {

//! Process exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_scenario_error = 2,   //!< unreadable scenario, parse error, invalid chart, missing decomposition
    exit_verification_failed = 3,
    exit_integrator_failure = 4,
};

struct CommandOptions {
    std::string scenario;
    std::string out;  //!< output directory; empty selects "magconf-out/<scenario name>"
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> particles;
    bool quiet = false;
    std::vector<std::string> inputs;  //!< CSV files for plot / verify
    Execution exec = Execution::parallel;
};

/*!
 * --seed replaces the scenario seed. --particles keeps the first n explicit
 * initial conditions and fills the rest with random draws (when the scenario
 * has a random block).
 */
void apply_overrides(Scenario& sc, const CommandOptions& options);

//! Domain, field and collar objects built from a scenario. Not copyable: bound data points into `collars`.
struct Setup {
    explicit Setup(Scenario scenario, Execution exec = Execution::parallel);
    Setup(const Setup&) = delete;
    Setup& operator=(const Setup&) = delete;

    Scenario scenario;
    Domain domain;
    FieldSpec field;
    std::vector<CollarField> collars;
    std::vector<CollarBoundData> bound_data;
};

struct ParticleBounds {
    std::optional<BoundReport> potential;
    std::optional<BoundReport> distance;
    std::string skipped;  //!< why the distance bound was not evaluated
};

struct SurrogateBound {
    double alpha = 1.0;
    double bound = 0.0;
};

//! Distance bounds as if the field had blow-up exponent alpha, at the closest approach.
struct SurrogateReport {
    double min_n = 0.0;
    double time = 0.0;
    std::vector<SurrogateBound> bounds;
    bool below_all = false;
};

ParticleBounds particle_bounds(const Setup& setup, const Trajectory& trajectory);
std::optional<SurrogateReport> surrogate_report(const Setup& setup, const Trajectory& trajectory);

//! Empty when every collar has a bounded blow-up decomposition, else a diagnostic naming the component.
std::string missing_decomposition(const Setup& setup);

std::vector<Trajectory> simulate(const Setup& setup, Execution exec);

nlohmann::json simulation_report(const Setup& setup, const std::vector<State>& initial,
                                 const std::vector<Trajectory>& trajectories, bool with_bounds);
nlohmann::json check_report(const Setup& setup, Execution exec);

std::string csv_name(std::size_t index);

// Subcommands; each returns an ExitCode and reports problems on `err`.
int run_simulate(const CommandOptions& options, std::ostream& log, std::ostream& err);
int run_check(const CommandOptions& options, std::ostream& log, std::ostream& err);
int run_verify(const CommandOptions& options, std::ostream& log, std::ostream& err);
int run_plot(const CommandOptions& options, std::ostream& log, std::ostream& err);

} // namespace magconf
