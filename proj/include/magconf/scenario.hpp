#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "magconf/dynamics.hpp"
#include "magconf/field.hpp"
#include "magconf/geometry.hpp"

namespace magconf {

/*
 * Scenario file, schema "magconf-scenario/1" (JSON):
 *
 *   {
 *     "schema": "magconf-scenario/1",
 *     "name": "disc-log",                                  // used for output names
 *     "description": "...",                                // optional, free text
 *     "domain": {"type": "disc", "R": 1.0}                 // or {"type": "annulus", "R1": 1, "R2": 3}
 *     "field": {"expression": "1/(1-r)", "parameters": {"a": 0.5}},
 *     "collars": [                                         // optional, one entry per component
 *       {"component": "outer", "N": 0.5, "epsilon": 0.6,
 *        "M": 1, "alpha": 1, "C_f": 1, "D_C": 0}           // M, alpha, C_f, D_C optional
 *     ],
 *     "particle": {"charge": 1, "mass": 1},
 *     "initial_conditions": {
 *       "explicit": [{"q": [0.3, 0], "v": [0, 1], "note": "..."}],
 *       "random": {"count": 10, "r_min": 0, "r_max": 0.5, "speed": 1}
 *     },
 *     "duration": 100,
 *     "integrator": {"rel_tol": 1e-12, "abs_tol": 1e-14, "c_step": 0.1, "n_floor_factor": 1e-6,
 *                    "max_steps": 100000000},
 *     "output": {"dt": 0.05},
 *     "seed": 1
 *   }
 *
 * Components are "outer" (disc boundary, annulus r = R2) and "inner"
 * (annulus r = R1). Collars left out default to epsilon = 0.5 and
 * N = 0.99 eps R, capped at 0.45 (R2 - R1) on an annulus.
 */

struct CollarSettings {
    std::string component;
    double N = 0.0;
    double epsilon = 0.5;
    DeclaredCollar declared;
};

struct InitialCondition {
    Vec2 q;
    Vec2 v;
    std::string note;
};

//! Uniform-in-area positions in r_min <= r <= r_max, uniform directions, fixed speed.
struct RandomDraw {
    std::size_t count = 0;
    double r_min = 0.0;
    double r_max = 0.0;
    double speed = 1.0;
};

enum class DomainShape { disc, annulus };

struct Scenario {
    std::string name;
    std::string description;
    DomainShape shape = DomainShape::disc;
    double R = 1.0;   // disc
    double R1 = 0.0;  // annulus
    double R2 = 0.0;
    std::string field_expression;
    std::map<std::string, double> parameters;
    std::vector<CollarSettings> collars;  //!< indexed like Domain::components()
    ParticleParams particle;
    std::vector<InitialCondition> initial;
    std::optional<RandomDraw> random;
    double duration = 0.0;
    IntegratorOptions integrator;
    std::uint64_t seed = 0;
};

//! Throws ScenarioError (schema problems, with the JSON path) or ParseError (field expression).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

Domain make_domain(const Scenario& sc);
FieldSpec make_field(const Scenario& sc);
std::vector<CollarField> make_collars(const Scenario& sc, const FieldSpec& field, const Domain& domain);

//! Uniform double in [0, 1) from the top 53 bits of one mt19937_64 draw.
double uniform01(std::mt19937_64& rng);

//! Explicit conditions first, then `random.count` draws from mt19937_64(seed).
std::vector<State> initial_states(const Scenario& sc);

} // namespace magconf
