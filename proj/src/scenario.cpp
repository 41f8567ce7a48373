#include "magconf/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "magconf/errors.hpp"

namespace magconf {

using nlohmann::json;

namespace {

constexpr const char* schema_id = "magconf-scenario/1";

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        throw ScenarioError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key))
            throw ScenarioError(where + ": unknown key '" + key + "'");
}

double number(const json& j, const std::string& key, const std::string& where)
{
    if (!j.contains(key))
        throw ScenarioError(where + ": missing '" + key + "'");
    if (!j.at(key).is_number())
        throw ScenarioError(where + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& where, double fallback)
{
    return j.contains(key) ? number(j, key, where) : fallback;
}

std::optional<double> optional_number(const json& j, const std::string& key, const std::string& where)
{
    if (!j.contains(key))
        return std::nullopt;
    return number(j, key, where);
}

Vec2 pair(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ScenarioError(where + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::string string_or(const json& j, const std::string& key, const std::string& where, std::string fallback)
{
    if (!j.contains(key))
        return fallback;
    if (!j.at(key).is_string())
        throw ScenarioError(where + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

} // namespace

Scenario parse_scenario(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("malformed JSON: ") + e.what());
    }
    check_keys(root, "scenario", {"schema", "name", "description", "domain", "field", "collars", "particle",
                                  "initial_conditions", "duration", "integrator", "output", "seed"});
    if (string_or(root, "schema", "scenario", schema_id) != schema_id)
        throw ScenarioError("scenario.schema: unsupported schema (expected " + std::string(schema_id) + ")");

    Scenario sc;
    sc.name = string_or(root, "name", "scenario", "scenario");
    sc.description = string_or(root, "description", "scenario", "");

    if (!root.contains("domain"))
        throw ScenarioError("scenario: missing 'domain'");
    const json& dom = root["domain"];
    const std::string type = string_or(dom, "type", "domain", "");
    if (type == "disc") {
        check_keys(dom, "domain", {"type", "R"});
        sc.shape = DomainShape::disc;
        sc.R = number(dom, "R", "domain");
        if (!(sc.R > 0.0))
            throw ScenarioError("domain.R: must be positive");
    } else if (type == "annulus") {
        check_keys(dom, "domain", {"type", "R1", "R2"});
        sc.shape = DomainShape::annulus;
        sc.R1 = number(dom, "R1", "domain");
        sc.R2 = number(dom, "R2", "domain");
        if (!(sc.R1 > 0.0 && sc.R1 < sc.R2))
            throw ScenarioError("domain: annulus requires 0 < R1 < R2");
    } else {
        throw ScenarioError("domain.type: expected \"disc\" or \"annulus\"");
    }

    if (!root.contains("field"))
        throw ScenarioError("scenario: missing 'field'");
    const json& fj = root["field"];
    check_keys(fj, "field", {"expression", "parameters"});
    sc.field_expression = string_or(fj, "expression", "field", "");
    if (sc.field_expression.empty())
        throw ScenarioError("field.expression: missing or empty");
    if (fj.contains("parameters")) {
        if (!fj["parameters"].is_object())
            throw ScenarioError("field.parameters: expected an object");
        for (const auto& [key, value] : fj["parameters"].items()) {
            if (!value.is_number())
                throw ScenarioError("field.parameters." + key + ": expected a number");
            sc.parameters[key] = value.get<double>();
        }
    }

    // collar defaults, then per-component overrides
    const std::vector<std::string> names = sc.shape == DomainShape::disc
                                               ? std::vector<std::string>{"outer"}
                                               : std::vector<std::string>{"outer", "inner"};
    for (const std::string& name : names) {
        CollarSettings c;
        c.component = name;
        c.epsilon = 0.5;
        const double radius = sc.shape == DomainShape::disc ? sc.R : (name == "outer" ? sc.R2 : sc.R1);
        c.N = 0.99 * c.epsilon * radius;
        if (sc.shape == DomainShape::annulus)
            c.N = std::min(c.N, 0.45 * (sc.R2 - sc.R1));
        sc.collars.push_back(c);
    }
    if (root.contains("collars")) {
        if (!root["collars"].is_array())
            throw ScenarioError("collars: expected an array");
        std::size_t i = 0;
        for (const json& cj : root["collars"]) {
            const std::string where = "collars[" + std::to_string(i++) + "]";
            check_keys(cj, where, {"component", "N", "epsilon", "M", "alpha", "C_f", "D_C"});
            const std::string comp = string_or(cj, "component", where, "outer");
            std::size_t k = 0;
            while (k < names.size() && names[k] != comp)
                ++k;
            if (k == names.size())
                throw ScenarioError(where + ".component: no component '" + comp + "' in this domain");
            CollarSettings& c = sc.collars[k];
            c.epsilon = number_or(cj, "epsilon", where, c.epsilon);
            c.N = number_or(cj, "N", where, c.N);
            c.declared.M = optional_number(cj, "M", where);
            c.declared.alpha = optional_number(cj, "alpha", where);
            c.declared.C_f = optional_number(cj, "C_f", where);
            c.declared.D_C = optional_number(cj, "D_C", where);
            if (c.declared.M.has_value() != c.declared.alpha.has_value())
                throw ScenarioError(where + ": M and alpha must be declared together");
        }
    }

    if (root.contains("particle")) {
        check_keys(root["particle"], "particle", {"charge", "mass"});
        sc.particle.charge = number_or(root["particle"], "charge", "particle", 1.0);
        sc.particle.mass = number_or(root["particle"], "mass", "particle", 1.0);
    }
    if (sc.particle.charge == 0.0)
        throw ScenarioError("particle.charge: must be nonzero");
    if (!(sc.particle.mass > 0.0))
        throw ScenarioError("particle.mass: must be positive");

    if (root.contains("initial_conditions")) {
        const json& ic = root["initial_conditions"];
        check_keys(ic, "initial_conditions", {"explicit", "random"});
        if (ic.contains("explicit")) {
            if (!ic["explicit"].is_array())
                throw ScenarioError("initial_conditions.explicit: expected an array");
            std::size_t i = 0;
            for (const json& p : ic["explicit"]) {
                const std::string where = "initial_conditions.explicit[" + std::to_string(i++) + "]";
                check_keys(p, where, {"q", "v", "note"});
                if (!p.contains("q") || !p.contains("v"))
                    throw ScenarioError(where + ": needs 'q' and 'v'");
                sc.initial.push_back({pair(p["q"], where + ".q"), pair(p["v"], where + ".v"),
                                      string_or(p, "note", where, "")});
            }
        }
        if (ic.contains("random")) {
            const json& rj = ic["random"];
            const std::string where = "initial_conditions.random";
            check_keys(rj, where, {"count", "r_min", "r_max", "speed"});
            RandomDraw r;
            const double count = number(rj, "count", where);
            if (!(count >= 0.0) || count != std::floor(count))
                throw ScenarioError(where + ".count: expected a nonnegative integer");
            r.count = static_cast<std::size_t>(count);
            r.r_min = number_or(rj, "r_min", where, 0.0);
            r.r_max = number(rj, "r_max", where);
            r.speed = number(rj, "speed", where);
            if (!(r.speed > 0.0))
                throw ScenarioError(where + ".speed: must be positive");
            if (!(r.r_min >= 0.0 && r.r_min <= r.r_max))
                throw ScenarioError(where + ": need 0 <= r_min <= r_max");
            sc.random = r;
        }
    }

    sc.duration = number(root, "duration", "scenario");
    if (!(sc.duration > 0.0))
        throw ScenarioError("scenario.duration: must be positive");

    if (root.contains("integrator")) {
        const json& ij = root["integrator"];
        check_keys(ij, "integrator", {"rel_tol", "abs_tol", "c_step", "n_floor_factor", "max_steps"});
        IntegratorOptions& o = sc.integrator;
        o.rel_tol = number_or(ij, "rel_tol", "integrator", o.rel_tol);
        o.abs_tol = number_or(ij, "abs_tol", "integrator", o.abs_tol);
        o.c_step = number_or(ij, "c_step", "integrator", o.c_step);
        o.n_floor_factor = number_or(ij, "n_floor_factor", "integrator", o.n_floor_factor);
        o.max_steps = static_cast<long>(number_or(ij, "max_steps", "integrator", static_cast<double>(o.max_steps)));
        if (!(o.rel_tol > 0.0 && o.abs_tol > 0.0 && o.c_step > 0.0 && o.n_floor_factor > 0.0 && o.max_steps > 0))
            throw ScenarioError("integrator: tolerances and limits must be positive");
    }
    if (root.contains("output")) {
        check_keys(root["output"], "output", {"dt"});
        sc.integrator.output_dt = number_or(root["output"], "dt", "output", 0.0);
        if (!(sc.integrator.output_dt >= 0.0))
            throw ScenarioError("output.dt: must be nonnegative");
    }

    if (root.contains("seed")) {
        const json& s = root["seed"];
        if (!s.is_number_unsigned())
            throw ScenarioError("scenario.seed: expected an unsigned 64-bit integer");
        sc.seed = s.get<std::uint64_t>();
    }

    // starts must lie strictly inside the domain
    const double r_lo = sc.shape == DomainShape::disc ? 0.0 : sc.R1;
    const double r_hi = sc.shape == DomainShape::disc ? sc.R : sc.R2;
    for (std::size_t i = 0; i < sc.initial.size(); ++i) {
        const double r = norm(sc.initial[i].q);
        if (!(r < r_hi && (sc.shape == DomainShape::disc || r > r_lo)))
            throw ScenarioError("initial_conditions.explicit[" + std::to_string(i) + "].q: outside the domain");
    }
    if (sc.random && sc.random->count > 0
        && !(sc.random->r_max < r_hi && (sc.shape == DomainShape::disc || sc.random->r_min > r_lo)))
        throw ScenarioError("initial_conditions.random: radius band leaves the domain");

    // surface expression errors now, with their position
    Expression::parse(sc.field_expression, sc.parameters);
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScenarioError("cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

Domain make_domain(const Scenario& sc)
{
    if (sc.shape == DomainShape::disc)
        return Domain::disc(sc.R, sc.collars[0].N, sc.collars[0].epsilon);
    return Domain::annulus(sc.R1, sc.R2, sc.collars[1].N, sc.collars[1].epsilon, sc.collars[0].N,
                           sc.collars[0].epsilon);
}

FieldSpec make_field(const Scenario& sc)
{
    return build_field(sc.field_expression, sc.parameters);
}

std::vector<CollarField> make_collars(const Scenario& sc, const FieldSpec& field, const Domain& domain)
{
    std::vector<CollarField> collars;
    for (std::size_t i = 0; i < domain.components().size(); ++i)
        collars.emplace_back(field, domain.components()[i].chart, sc.collars[i].declared);
    return collars;
}

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<State> initial_states(const Scenario& sc)
{
    std::vector<State> states;
    for (const InitialCondition& ic : sc.initial)
        states.push_back({0.0, ic.q, ic.v});
    if (sc.random) {
        std::mt19937_64 rng(sc.seed);
        const RandomDraw& r = *sc.random;
        constexpr double two_pi = 2.0 * std::numbers::pi;
        for (std::size_t i = 0; i < r.count; ++i) {
            const double u = uniform01(rng);
            const double rho = std::sqrt(r.r_min * r.r_min + u * (r.r_max * r.r_max - r.r_min * r.r_min));
            const double phi = two_pi * uniform01(rng);
            const double psi = two_pi * uniform01(rng);
            states.push_back({0.0, {rho * std::cos(phi), rho * std::sin(phi)},
                              {r.speed * std::cos(psi), r.speed * std::sin(psi)}});
        }
    }
    return states;
}

} // namespace magconf
