#include "magconf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "magconf/errors.hpp"
#include "magconf/output.hpp"

namespace magconf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* report_schema = "magconf-report/1";
constexpr const char* prng_name = "mt19937_64; uniform = (draw >> 11) * 2^-53";

json vec(Vec2 v)
{
    return json::array({v.x, v.y});
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

fs::path output_dir(const CommandOptions& options, const Scenario& sc)
{
    fs::path dir = options.out.empty() ? fs::path("magconf-out") / sc.name : fs::path(options.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << content;
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

json scenario_header(const Setup& setup, const char* command)
{
    const Scenario& sc = setup.scenario;
    json domain;
    if (sc.shape == DomainShape::disc)
        domain = {{"type", "disc"}, {"R", sc.R}};
    else
        domain = {{"type", "annulus"}, {"R1", sc.R1}, {"R2", sc.R2}};
    json collars = json::array();
    for (std::size_t i = 0; i < setup.collars.size(); ++i) {
        const CollarField& cf = setup.collars[i];
        json c = {{"component", setup.domain.components()[i].name},
                  {"N", cf.chart().width()},
                  {"epsilon", cf.chart().epsilon()},
                  {"K", cf.chart().bounds().K},
                  {"K_prime", cf.chart().bounds().K_prime},
                  {"D_C", setup.bound_data[i].D_C},
                  {"D_C_declared", cf.declared().D_C.has_value()}};
        c["decomposition"] = cf.decomposition() ? to_json(*cf.decomposition()) : json(nullptr);
        collars.push_back(c);
    }
    return {{"schema", report_schema},
            {"command", command},
            {"scenario", sc.name},
            {"field", sc.field_expression},
            {"parameters", sc.parameters},
            {"domain", domain},
            {"collars", collars},
            {"particle", {{"charge", sc.particle.charge}, {"mass", sc.particle.mass}}},
            {"duration", sc.duration},
            {"seed", sc.seed},
            {"prng", prng_name}};
}

std::string summary_line(const Trajectory& t, std::size_t index)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "particle %3zu  %-12s  min_n=%.3e  max|A|=%.4g  speed_drift=%.2e", index,
                  to_string(t.status).c_str(), t.min_n, t.max_abs_A, t.max_speed_drift);
    return buf;
}

// Run `body`, mapping exceptions onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const ParseError& e) {
        err << "error: field expression: " << e.what() << '\n';
        return exit_scenario_error;
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return exit_scenario_error;
    } catch (const ChartError& e) {
        err << "error: " << e.what() << '\n';
        return exit_scenario_error;
    } catch (const FieldSingular& e) {
        err << "error: integrator: " << e.what() << '\n';
        return exit_integrator_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_scenario_error;
    }
}

} // namespace

void apply_overrides(Scenario& sc, const CommandOptions& options)
{
    if (options.seed)
        sc.seed = *options.seed;
    if (options.particles) {
        const std::size_t n = *options.particles;
        const std::size_t keep = std::min(n, sc.initial.size());
        sc.initial.resize(keep);
        if (sc.random)
            sc.random->count = n - keep;
    }
}

Setup::Setup(Scenario sc, Execution exec)
    : scenario(std::move(sc)), domain(make_domain(scenario)), field(make_field(scenario))
{
    collars = make_collars(scenario, field, domain);
    for (const CollarField& c : collars)
        bound_data.push_back(magconf::bound_data(c, exec));
}

std::string missing_decomposition(const Setup& setup)
{
    for (std::size_t i = 0; i < setup.collars.size(); ++i) {
        const auto& d = setup.collars[i].decomposition();
        const std::string& name = setup.domain.components()[i].name;
        if (!d)
            return "collar '" + name
                   + "': no decomposition M/n^alpha + f found; declare M and alpha (and C_f) in the scenario";
        if (!d->bounded_blowup_form)
            return "collar '" + name + "': decomposition is not of the form M/n^alpha + bounded f with alpha >= 1"
                   + (d->note.empty() ? std::string() : " (" + d->note + ")");
    }
    return {};
}

ParticleBounds particle_bounds(const Setup& setup, const Trajectory& trajectory)
{
    ParticleBounds b;
    b.potential = verify_potential_bound(trajectory, setup.bound_data, setup.scenario.particle);
    const std::string missing = missing_decomposition(setup);
    if (missing.empty())
        b.distance = verify_distance_bound(trajectory, setup.bound_data, setup.scenario.particle);
    else
        b.skipped = missing;
    return b;
}

std::optional<SurrogateReport> surrogate_report(const Setup& setup, const Trajectory& trajectory)
{
    // closest approach among collar samples, with the entry of its collar stretch
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
        const auto& d = trajectory.samples[i].diagnostics;
        if (d && (!best || d->canonical.n < trajectory.samples[*best].diagnostics->canonical.n))
            best = i;
    }
    if (!best)
        return std::nullopt;
    const auto& closest = *trajectory.samples[*best].diagnostics;
    std::size_t entry = *best;
    while (entry > 0 && trajectory.samples[entry - 1].diagnostics
           && trajectory.samples[entry - 1].diagnostics->component == closest.component)
        --entry;
    const double p_s0 = trajectory.samples[entry].diagnostics->canonical.p_s;
    const double T = trajectory.samples[*best].state.t - trajectory.samples[entry].state.t;

    SurrogateReport r;
    r.min_n = closest.canonical.n;
    r.time = trajectory.samples[*best].state.t;
    r.below_all = true;
    for (double alpha : {1.0, 1.5, 2.0, 3.0}) {
        const double bound = surrogate_distance_bound(setup.bound_data[closest.component], setup.scenario.particle,
                                                      trajectory.H0, p_s0, alpha, T);
        r.bounds.push_back({alpha, bound});
        r.below_all = r.below_all && r.min_n < bound;
    }
    return r;
}

std::vector<Trajectory> simulate(const Setup& setup, Execution exec)
{
    const auto initial = initial_states(setup.scenario);
    return run_ensemble(setup.field, setup.scenario.particle, setup.domain, setup.collars, initial,
                        setup.scenario.duration, setup.scenario.integrator, exec);
}

json simulation_report(const Setup& setup, const std::vector<State>& initial,
                       const std::vector<Trajectory>& trajectories, bool with_bounds)
{
    json report = scenario_header(setup, with_bounds ? "verify" : "simulate");
    const bool surrogates = !missing_decomposition(setup).empty();
    json particles = json::array();
    std::size_t completed = 0, hit_floor = 0, failed = 0;
    bool all_pass = true;
    double max_r = 0.0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& t = trajectories[i];
        double r = 0.0;
        for (const Sample& s : t.samples)
            r = std::max(r, norm(s.state.q));
        max_r = std::max(max_r, r);
        const State& last = t.samples.back().state;
        json p = {{"index", i},
                  {"csv", csv_name(i)},
                  {"initial", {{"q", vec(initial[i].q)}, {"v", vec(initial[i].v)}}},
                  {"status", to_string(t.status)},
                  {"message", t.message},
                  {"steps", t.steps},
                  {"rejected_steps", t.rejected},
                  {"samples", t.samples.size()},
                  {"H0", t.H0},
                  {"min_n", finite_or_null(t.min_n)},
                  {"max_r", r},
                  {"max_abs_A", t.max_abs_A},
                  {"max_energy_drift", t.max_energy_drift},
                  {"max_speed_drift", t.max_speed_drift},
                  {"final", {{"t", last.t}, {"q", vec(last.q)}, {"v", vec(last.v)}}}};
        if (i < setup.scenario.initial.size() && !setup.scenario.initial[i].note.empty())
            p["note"] = setup.scenario.initial[i].note;
        switch (t.status) {
        case Termination::completed: ++completed; break;
        case Termination::hit_floor: ++hit_floor; break;
        case Termination::step_failure: ++failed; break;
        }

        const ParticleBounds b = particle_bounds(setup, t);
        json bounds;
        bounds["potential"] = to_json(*b.potential);
        bounds["distance"] = b.distance ? to_json(*b.distance) : json(nullptr);
        if (!b.skipped.empty())
            bounds["distance_skipped"] = b.skipped;
        all_pass = all_pass && b.potential->pass && (!b.distance || b.distance->pass);
        p["bounds"] = bounds;

        if (surrogates) {
            if (auto s = surrogate_report(setup, t)) {
                json list = json::array();
                for (const SurrogateBound& sb : s->bounds)
                    list.push_back({{"alpha", sb.alpha}, {"bound", sb.bound}});
                p["surrogate_distance_bounds"] = {
                    {"min_n", s->min_n}, {"time", s->time}, {"bounds", list}, {"min_n_below_all", s->below_all}};
            }
        }
        particles.push_back(p);
    }
    report["particles"] = particles;
    report["summary"] = {{"particles", trajectories.size()},
                         {"completed", completed},
                         {"hit_floor", hit_floor},
                         {"step_failure", failed},
                         {"max_r", max_r},
                         {"all_bounds_pass", all_pass}};
    return report;
}

json check_report(const Setup& setup, Execution exec)
{
    json report = scenario_header(setup, "check");
    json comps = json::array();
    for (std::size_t i = 0; i < setup.collars.size(); ++i) {
        const HypothesisReport h = hypothesis_report(setup.collars[i], exec);
        comps.push_back({{"component", setup.domain.components()[i].name}, {"hypotheses", to_json(h)}});
    }
    report["components"] = comps;
    return report;
}

std::string csv_name(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "particle_%03zu.csv", index);
    return buf;
}

int run_simulate(const CommandOptions& options, std::ostream& log, std::ostream& err)
{
    return guarded(err, [&] {
        Scenario sc = load_scenario(options.scenario);
        apply_overrides(sc, options);
        const Setup setup(std::move(sc), options.exec);
        const auto initial = initial_states(setup.scenario);
        const auto trajectories = simulate(setup, options.exec);
        const fs::path dir = output_dir(options, setup.scenario);
        // single collector, fixed order
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            std::ostringstream csv;
            write_trajectory_csv(csv, trajectories[i]);
            write_file(dir / csv_name(i), csv.str());
        }
        const json report = simulation_report(setup, initial, trajectories, false);
        write_file(dir / "report.json", dump(report));
        bool failure = false;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            failure = failure || trajectories[i].status == Termination::step_failure;
            if (!options.quiet)
                log << summary_line(trajectories[i], i) << '\n';
            if (trajectories[i].status == Termination::step_failure)
                err << "particle " << i << ": integrator failure: " << trajectories[i].message << '\n';
        }
        if (!options.quiet)
            log << "wrote " << trajectories.size() << " trajectories and report.json to " << dir.string() << '\n';
        return failure ? exit_integrator_failure : exit_ok;
    });
}

int run_check(const CommandOptions& options, std::ostream& log, std::ostream& err)
{
    return guarded(err, [&] {
        Scenario sc = load_scenario(options.scenario);
        apply_overrides(sc, options);
        const Setup setup(std::move(sc), options.exec);
        const json report = check_report(setup, options.exec);
        const fs::path dir = output_dir(options, setup.scenario);
        write_file(dir / "check.json", dump(report));
        if (!options.quiet) {
            for (const json& c : report["components"]) {
                const json& h = c["hypotheses"];
                log << c["component"].get<std::string>() << ": blow-up " << h["blowup"]["verdict"].get<std::string>()
                    << ", tangential " << (h["tangential"]["violated"].get<bool>() ? "violated" : "finite")
                    << ", inverse-square comparison " << (h["comparison"]["meets"].get<bool>() ? "meets" : "fails")
                    << '\n';
            }
            log << "wrote check.json to " << dir.string() << '\n';
        }
        return exit_ok;
    });
}

int run_verify(const CommandOptions& options, std::ostream& log, std::ostream& err)
{
    return guarded(err, [&] {
        Scenario sc = load_scenario(options.scenario);
        apply_overrides(sc, options);
        const Setup setup(std::move(sc), options.exec);
        if (const std::string missing = missing_decomposition(setup); !missing.empty()) {
            err << "error: cannot verify the distance bound: " << missing << '\n';
            return static_cast<int>(exit_scenario_error);
        }
        const fs::path dir = output_dir(options, setup.scenario);

        std::vector<State> initial;
        std::vector<Trajectory> trajectories;
        if (options.inputs.empty()) {
            initial = initial_states(setup.scenario);
            trajectories = simulate(setup, options.exec);
            for (std::size_t i = 0; i < trajectories.size(); ++i) {
                std::ostringstream csv;
                write_trajectory_csv(csv, trajectories[i]);
                write_file(dir / csv_name(i), csv.str());
            }
        } else {
            // re-verify trajectories written by simulate
            for (const std::string& path : options.inputs) {
                std::ifstream in(path, std::ios::binary);
                if (!in)
                    throw ScenarioError("cannot open CSV '" + path + "'");
                auto t = trajectory_from_csv(read_trajectory_csv(in), setup.domain, setup.scenario.particle);
                if (t.samples.empty())
                    throw ScenarioError("CSV '" + path + "' has no samples");
                diagnostics_pass(t, setup.domain, setup.collars, setup.scenario.particle);
                initial.push_back(t.samples.front().state);
                trajectories.push_back(std::move(t));
            }
        }

        const json report = simulation_report(setup, initial, trajectories, true);
        write_file(dir / "verify.json", dump(report));
        bool integrator_failure = false, bound_failure = false;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const json& b = report["particles"][i]["bounds"];
            const bool pot = b["potential"]["pass"].get<bool>();
            const bool dist = b["distance"]["pass"].get<bool>();
            integrator_failure = integrator_failure || trajectories[i].status == Termination::step_failure;
            bound_failure = bound_failure || !pot || !dist;
            if (!options.quiet || !pot || !dist) {
                std::ostream& os = (pot && dist) ? log : err;
                os << "particle " << i << ": potential bound " << (pot ? "pass" : "FAIL") << " (worst margin "
                   << b["potential"]["worst_margin"].dump() << " at t=" << b["potential"]["worst_time"].dump()
                   << "), distance bound " << (dist ? "pass" : "FAIL") << " (worst margin "
                   << b["distance"]["worst_margin"].dump() << " at t=" << b["distance"]["worst_time"].dump()
                   << ")\n";
            }
        }
        if (!options.quiet)
            log << "wrote verify.json to " << dir.string() << '\n';
        if (integrator_failure)
            return static_cast<int>(exit_integrator_failure);
        return static_cast<int>(bound_failure ? exit_verification_failed : exit_ok);
    });
}

int run_plot(const CommandOptions& options, std::ostream& log, std::ostream& err)
{
    return guarded(err, [&] {
        Scenario sc = load_scenario(options.scenario);
        apply_overrides(sc, options);
        const fs::path dir = output_dir(options, sc);
        std::vector<std::string> inputs = options.inputs;
        if (inputs.empty()) {
            for (const auto& entry : fs::directory_iterator(dir)) {
                const std::string name = entry.path().filename().string();
                if (name.starts_with("particle_") && name.ends_with(".csv"))
                    inputs.push_back(entry.path().string());
            }
            std::sort(inputs.begin(), inputs.end());
        }
        PlotInput plot;
        if (sc.shape == DomainShape::disc) {
            plot.boundary.push_back({{0.0, 0.0}, sc.R});
        } else {
            plot.boundary.push_back({{0.0, 0.0}, sc.R2});
            plot.boundary.push_back({{0.0, 0.0}, sc.R1});
        }
        plot.caption = "B = " + sc.field_expression;
        if (!sc.parameters.empty()) {
            plot.caption += " (";
            bool first = true;
            for (const auto& [k, v] : sc.parameters) {
                plot.caption += (first ? "" : ", ") + k + " = " + format_double(v);
                first = false;
            }
            plot.caption += ")";
        }
        for (const std::string& path : inputs) {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw ScenarioError("cannot open CSV '" + path + "'");
            std::vector<Vec2> pts;
            for (const CsvRow& row : read_trajectory_csv(in))
                pts.push_back(row.state.q);
            plot.paths.push_back(std::move(pts));
        }
        write_file(dir / "plot.svg", render_svg(plot));
        if (!options.quiet)
            log << "wrote plot.svg (" << plot.paths.size() << " trajectories) to " << dir.string() << '\n';
        return static_cast<int>(exit_ok);
    });
}

} // namespace magconf
