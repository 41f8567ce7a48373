#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "magconf/commands.hpp"
#include "magconf/errors.hpp"
#include "magconf/output.hpp"
#include "magconf/scenario.hpp"

using namespace magconf;
namespace fs = std::filesystem;

namespace {

const std::string scenario_dir = MAGCONF_SCENARIO_DIR;

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("magconf_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

const char* minimal_scenario = R"json({
  "schema": "magconf-scenario/1",
  "name": "minimal",
  "domain": {"type": "disc", "R": 1.0},
  "field": {"expression": "1/(1-r)"},
  "initial_conditions": {"explicit": [{"q": [0.3, 0], "v": [0, 1]}]},
  "duration": 2,
  "output": {"dt": 0.1}
})json";

std::string scenario_error(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string with(std::string text, const std::string& from, const std::string& to)
{
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

} // namespace

TEST_CASE("scenario parsing and defaults")
{
    const Scenario sc = parse_scenario(minimal_scenario);
    CHECK(sc.name == "minimal");
    CHECK(sc.shape == DomainShape::disc);
    REQUIRE(sc.collars.size() == 1);
    CHECK(sc.collars[0].epsilon == 0.5);
    CHECK(sc.collars[0].N == doctest::Approx(0.495));
    CHECK(sc.particle.charge == 1.0);
    CHECK(sc.initial.size() == 1);
    CHECK(sc.integrator.output_dt == 0.1);
    CHECK(sc.seed == 0);
}

TEST_CASE("scenario errors name the offending entry")
{
    const std::string base = minimal_scenario;
    CHECK(scenario_error(with(base, "\"duration\": 2", "\"duration\": 2, \"colour\": 1"))
              .find("unknown key 'colour'") != std::string::npos);
    CHECK(scenario_error(with(base, "\"duration\": 2", "\"duration\": -1")).find("scenario.duration")
          != std::string::npos);
    CHECK(scenario_error(with(base, "\"R\": 1.0", "\"R\": 0")).find("domain.R") != std::string::npos);
    CHECK(scenario_error(with(base, "[0.3, 0]", "[1.3, 0]")).find("initial_conditions.explicit[0].q")
          != std::string::npos);
    CHECK(scenario_error(with(base, "magconf-scenario/1", "magconf-scenario/9")).find("schema")
          != std::string::npos);
    CHECK(scenario_error("{not json").find("malformed JSON") != std::string::npos);
    CHECK(scenario_error(with(base, "\"type\": \"disc\", \"R\": 1.0", "\"type\": \"annulus\", \"R1\": 2, \"R2\": 1"))
              .find("annulus") != std::string::npos);
    try {
        parse_scenario(with(base, "1/(1-r)", "1/(1-r) + tan(x)"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 10);
    }
}

TEST_CASE("uniform01 uses the top 53 bits of mt19937_64")
{
    std::mt19937_64 a(42), b(42);
    for (int i = 0; i < 10; ++i) {
        const double u = uniform01(a);
        CHECK(u == static_cast<double>(b() >> 11) * 0x1.0p-53);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("initial states: explicit first, seeded draws in the band")
{
    Scenario sc = parse_scenario(minimal_scenario);
    sc.random = RandomDraw{200, 0.2, 0.5, 1.5};
    sc.seed = 9;
    const auto a = initial_states(sc);
    const auto b = initial_states(sc);
    REQUIRE(a.size() == 201);
    CHECK(a[0].q == Vec2{0.3, 0.0});
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].q == b[i].q);
        CHECK(a[i].v == b[i].v);
    }
    for (std::size_t i = 1; i < a.size(); ++i) {
        CHECK(norm(a[i].q) >= 0.2 - 1e-15);
        CHECK(norm(a[i].q) <= 0.5 + 1e-15);
        CHECK(norm(a[i].v) == doctest::Approx(1.5));
    }
    sc.seed = 10;
    CHECK_FALSE(initial_states(sc)[1].q == a[1].q);
}

TEST_CASE("command-line overrides")
{
    Scenario sc = parse_scenario(minimal_scenario);
    sc.initial.push_back({{0.1, 0.1}, {1, 0}, ""});
    sc.random = RandomDraw{4, 0.0, 0.5, 1.0};
    CommandOptions opt;
    opt.seed = 77;
    opt.particles = 5;
    apply_overrides(sc, opt);
    CHECK(sc.seed == 77);
    CHECK(sc.initial.size() == 2);
    CHECK(sc.random->count == 3);
    opt.particles = 1;
    apply_overrides(sc, opt);
    CHECK(sc.initial.size() == 1);
    CHECK(sc.random->count == 0);
}

TEST_CASE("trajectory CSV round trip is exact")
{
    Trajectory t;
    Sample a;
    a.state = {0.0, {0.1, 1.0 / 3.0}, {-0.0, 5e-324}};
    Sample b;
    b.state = {0.1, {std::nextafter(0.2, 1.0), -0.7}, {1e300, -2.5}};
    b.diagnostics = Diagnostics{0, {0.3, 6.2831853, -1.0 / 7.0, 2.0 / 3.0}, -0.44315, 0.5};
    t.samples = {a, b};
    std::stringstream csv;
    write_trajectory_csv(csv, t);
    const auto rows = read_trajectory_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].state.q == a.state.q);
    CHECK(rows[0].state.v.y == 5e-324);
    CHECK(std::signbit(rows[0].state.v.x));
    CHECK_FALSE(rows[0].canonical);
    CHECK(rows[1].state.q == b.state.q);
    CHECK(rows[1].state.v == b.state.v);
    REQUIRE(rows[1].canonical);
    CHECK(rows[1].canonical->p_n == -1.0 / 7.0);
    CHECK(rows[1].A == -0.44315);

    std::stringstream again;
    Trajectory back;
    for (const CsvRow& r : rows) {
        Sample s;
        s.state = r.state;
        if (r.canonical)
            s.diagnostics = Diagnostics{0, *r.canonical, r.A, r.H};
        back.samples.push_back(s);
    }
    write_trajectory_csv(again, back);
    CHECK(again.str() == csv.str());
}

TEST_CASE("malformed CSV is rejected with a line number")
{
    auto error_of = [](const std::string& text) -> std::string {
        std::istringstream in(text);
        try {
            read_trajectory_csv(in);
        } catch (const ScenarioError& e) {
            return e.what();
        }
        return "";
    };
    const std::string head = std::string(csv_magic) + "\n" + csv_header + "\n";
    CHECK(error_of("t,x,y\n").find("line 1") != std::string::npos);
    CHECK(error_of(std::string(csv_magic) + "\nt,x\n").find("line 2") != std::string::npos);
    CHECK(error_of(head + "0,0,0,0,0,,,,,,\n0,1,2\n").find("line 4") != std::string::npos);
    CHECK(error_of(head + "0,abc,0,0,0,,,,,,\n").find("bad number 'abc'") != std::string::npos);
    CHECK(error_of(head).empty());
}

TEST_CASE("SVG rendering")
{
    PlotInput plot;
    plot.boundary.push_back({{0, 0}, 1.0});
    plot.paths.push_back({{0.2, 0.1}, {0.2, 0.1}, {0.2, 0.1}});
    plot.caption = "B = 1/(1-r) & <x>";
    const std::string svg = render_svg(plot);
    CHECK(svg.find("<polyline") == std::string::npos);
    CHECK(svg.find("r=\"3\"") != std::string::npos);
    CHECK(svg.find("&amp; &lt;x&gt;") != std::string::npos);
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") != std::string::npos);
    CHECK(render_svg(plot) == svg);

    plot.paths.push_back({{0, 0}, {0.5, 0.5}});
    const std::string two = render_svg(plot);
    CHECK(two.find("<polyline") != std::string::npos);
    CHECK(two.find("#ff7f0e") != std::string::npos);
}

TEST_CASE("simulate with an empty particle list")
{
    const fs::path dir = scratch("empty");
    write_text(dir / "empty.json", with(minimal_scenario, "\"explicit\": [{\"q\": [0.3, 0], \"v\": [0, 1]}]",
                                        "\"explicit\": []"));
    CommandOptions opt;
    opt.scenario = (dir / "empty.json").string();
    opt.out = (dir / "out").string();
    std::ostringstream log, err;
    CHECK(run_simulate(opt, log, err) == exit_ok);
    const auto report = nlohmann::json::parse(read_file(dir / "out" / "report.json"));
    CHECK(report["particles"].size() == 0);
}

TEST_CASE("subcommand exit codes")
{
    const fs::path dir = scratch("exit");
    std::ostringstream log, err;
    CommandOptions opt;
    opt.quiet = true;
    opt.out = (dir / "out").string();

    opt.scenario = (dir / "missing.json").string();
    CHECK(run_simulate(opt, log, err) == exit_scenario_error);

    write_text(dir / "bad_expr.json", with(minimal_scenario, "1/(1-r)", "1/(1-r"));
    opt.scenario = (dir / "bad_expr.json").string();
    CHECK(run_simulate(opt, log, err) == exit_scenario_error);
    CHECK(err.str().find("position") != std::string::npos);

    write_text(dir / "bad_chart.json",
               with(minimal_scenario, "\"duration\": 2",
                    "\"collars\": [{\"component\": \"outer\", \"N\": 0.5, \"epsilon\": 0.4}], \"duration\": 2"));
    opt.scenario = (dir / "bad_chart.json").string();
    CHECK(run_simulate(opt, log, err) == exit_scenario_error);

    write_text(dir / "budget.json",
               with(minimal_scenario, "\"duration\": 2", "\"integrator\": {\"max_steps\": 5}, \"duration\": 2"));
    opt.scenario = (dir / "budget.json").string();
    CHECK(run_simulate(opt, log, err) == exit_integrator_failure);

    write_text(dir / "ok.json", minimal_scenario);
    opt.scenario = (dir / "ok.json").string();
    CHECK(run_simulate(opt, log, err) == exit_ok);
    CHECK(run_verify(opt, log, err) == exit_ok);
    CHECK(run_check(opt, log, err) == exit_ok);
    CHECK(run_plot(opt, log, err) == exit_ok);
    CHECK(fs::exists(dir / "out" / "plot.svg"));

    // verify consumes what simulate wrote
    opt.inputs = {(dir / "out" / "particle_000.csv").string()};
    CHECK(run_verify(opt, log, err) == exit_ok);
    write_text(dir / "broken.csv", "garbage\n");
    opt.inputs = {(dir / "broken.csv").string()};
    CHECK(run_verify(opt, log, err) == exit_scenario_error);
    CHECK(run_plot(opt, log, err) == exit_scenario_error);
    opt.inputs.clear();

    // no blow-up decomposition: explicit diagnostic
    opt.scenario = scenario_dir + "/fig3.json";
    std::ostringstream err3;
    CHECK(run_verify(opt, log, err3) == exit_scenario_error);
    CHECK(err3.str().find("cannot verify the distance bound") != std::string::npos);
}

TEST_CASE("wrong D_C for a non-radial field fails verification")
{
    const fs::path dir = scratch("negative");
    std::string text = read_file(scenario_dir + "/fig2a.json");
    const auto pos = text.find("\"collars\"");
    REQUIRE(pos != std::string::npos);
    const auto end = text.find(']', pos);
    text.replace(pos, end - pos + 1,
                 "\"collars\": [{\"component\": \"outer\", \"N\": 0.5, \"epsilon\": 0.6, \"D_C\": 0}]");
    text = with(text, "\"initial_conditions\": {",
                "\"initial_conditions\": {\"random\": {\"count\": 8, \"r_min\": 0, \"r_max\": 0.5, \"speed\": 1},");
    text = with(text, "\"initial_conditions\": {",
                "\"initial_conditions\": {\"random\": {\"count\": 8, \"r_min\": 0, \"r_max\": 0.5, \"speed\": 1},");
    write_text(dir / "wrong.json", text);
    CommandOptions opt;
    opt.scenario = (dir / "wrong.json").string();
    opt.out = (dir / "out").string();
    opt.particles = 10;
    opt.quiet = true;
    std::ostringstream log, err;
    CHECK(run_verify(opt, log, err) == exit_verification_failed);
    CHECK(err.str().find("potential bound FAIL") != std::string::npos);
    const auto report = nlohmann::json::parse(read_file(dir / "out" / "verify.json"));
    bool witnessed = false;
    for (const auto& p : report["particles"])
        witnessed = witnessed || !p["bounds"]["potential"]["pass"].get<bool>();
    CHECK(witnessed);
}
