#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magconf/bounds.hpp"
#include "magconf/dynamics.hpp"
#include "magconf/geometry.hpp"

namespace magconf {

/*
 * Trajectory CSV, version 1:
 *
 *   # magconf trajectory csv v1
 *   t,x,y,vx,vy,n,s,p_n,p_s,A,H
 *   0,0.25,0,0,1,,,,,,
 *
 * Numbers use the shortest decimal form that reads back to the same double.
 * n..H are empty for samples outside every collar.
 */
inline constexpr const char* csv_magic = "# magconf trajectory csv v1";
inline constexpr const char* csv_header = "t,x,y,vx,vy,n,s,p_n,p_s,A,H";

//! Shortest round-trip decimal representation.
std::string format_double(double v);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

struct CsvRow {
    State state;
    std::optional<Canonical> canonical;
    double A = 0.0;
    double H = 0.0;
};

//! Throws ScenarioError on a malformed file (line number in the message).
std::vector<CsvRow> read_trajectory_csv(std::istream& in);

/*!
 * Rebuilds a trajectory with diagnostics from CSV rows; the collar of each
 * sample is the one `domain.locate` assigns, H0 is the kinetic energy of the
 * first row.
 */
Trajectory trajectory_from_csv(const std::vector<CsvRow>& rows, const Domain& domain, const ParticleParams& params);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const BlowupReport& report);
nlohmann::json to_json(const TangentialReport& report);
nlohmann::json to_json(const ComparisonReport& report);
nlohmann::json to_json(const HypothesisReport& report);
nlohmann::json to_json(const CollarDecomposition& d);

//! Everything the SVG renderer draws.
struct PlotInput {
    struct Circle {
        Vec2 center;
        double radius;
    };
    std::vector<Circle> boundary;
    std::vector<std::vector<Vec2>> paths;
    std::string caption;
};

//! Deterministic SVG 1.1 document; one palette colour per path, a dot for stationary paths.
std::string render_svg(const PlotInput& input);

} // namespace magconf
