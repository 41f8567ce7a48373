#include "magconf/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "magconf/errors.hpp"

namespace magconf {

using nlohmann::json;

std::string format_double(double v)
{
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory)
{
    out << csv_magic << '\n' << csv_header << '\n';
    std::string line;
    for (const Sample& s : trajectory.samples) {
        line.clear();
        for (double v : {s.state.t, s.state.q.x, s.state.q.y, s.state.v.x, s.state.v.y}) {
            if (!line.empty())
                line += ',';
            line += format_double(v);
        }
        if (const auto& d = s.diagnostics) {
            for (double v : {d->canonical.n, d->canonical.s, d->canonical.p_n, d->canonical.p_s, d->A, d->H}) {
                line += ',';
                line += format_double(v);
            }
        } else {
            line += ",,,,,,";
        }
        out << line << '\n';
    }
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_cell(std::string_view cell, std::size_t line_no)
{
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ScenarioError("malformed CSV at line " + std::to_string(line_no) + ": bad number '"
                            + std::string(cell) + "'");
    return v;
}

} // namespace

std::vector<CsvRow> read_trajectory_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != csv_magic)
        throw ScenarioError("malformed CSV at line 1: expected '" + std::string(csv_magic) + "'");
    if (!std::getline(in, line) || line != csv_header)
        throw ScenarioError("malformed CSV at line 2: expected header '" + std::string(csv_header) + "'");
    std::vector<CsvRow> rows;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto cells = split_commas(line);
        if (cells.size() != 11)
            throw ScenarioError("malformed CSV at line " + std::to_string(line_no) + ": expected 11 columns, got "
                                + std::to_string(cells.size()));
        CsvRow row;
        row.state.t = parse_cell(cells[0], line_no);
        row.state.q = {parse_cell(cells[1], line_no), parse_cell(cells[2], line_no)};
        row.state.v = {parse_cell(cells[3], line_no), parse_cell(cells[4], line_no)};
        const bool empty = std::all_of(cells.begin() + 5, cells.end(), [](auto c) { return c.empty(); });
        if (!empty) {
            Canonical c;
            c.n = parse_cell(cells[5], line_no);
            c.s = parse_cell(cells[6], line_no);
            c.p_n = parse_cell(cells[7], line_no);
            c.p_s = parse_cell(cells[8], line_no);
            row.canonical = c;
            row.A = parse_cell(cells[9], line_no);
            row.H = parse_cell(cells[10], line_no);
        }
        rows.push_back(row);
    }
    return rows;
}

Trajectory trajectory_from_csv(const std::vector<CsvRow>& rows, const Domain& domain, const ParticleParams& params)
{
    Trajectory traj;
    for (const CsvRow& row : rows) {
        Sample s;
        s.state = row.state;
        if (row.canonical) {
            Diagnostics d;
            const auto where = domain.locate(row.state.q);
            d.component = where ? where->component : domain.nearest_boundary(row.state.q).first;
            d.canonical = *row.canonical;
            d.A = row.A;
            d.H = row.H;
            s.diagnostics = d;
        }
        traj.samples.push_back(s);
    }
    if (!rows.empty())
        traj.H0 = 0.5 * params.mass * dot(rows.front().state.v, rows.front().state.v);
    return traj;
}

namespace {

// json stores non-finite doubles as null
json number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

} // namespace

json to_json(const BoundReport& r)
{
    json j;
    j["kind"] = r.kind;
    j["pass"] = r.pass;
    j["vacuous"] = r.vacuous;
    j["note"] = r.note;
    j["tol_margin"] = r.tol_margin;
    j["worst_margin"] = number(r.worst_margin);
    j["worst_time"] = r.worst_time;
    j["samples_checked"] = r.checked;
    if (r.kind == "distance") {
        j["worst_margin_alternative"] = number(r.worst_margin_alternative);
        j["used_conservative_D0"] = r.used_conservative;
    }
    json segs = json::array();
    for (const BoundSegment& s : r.segments) {
        const auto& c = s.constants;
        json seg = {{"component", s.component},
                    {"first_sample", s.first_sample},
                    {"last_sample", s.last_sample},
                    {"entry_time", s.entry_time},
                    {"p_s0", c.inputs.p_s0},
                    {"C0", c.C0},
                    {"C1", c.C1}};
        if (r.kind == "distance") {
            seg["D0"] = c.D0;
            seg["D0_conservative"] = c.D0_conservative;
            seg["D1"] = c.D1;
        }
        segs.push_back(seg);
    }
    j["segments"] = segs;
    return j;
}

json to_json(const BlowupReport& r)
{
    json j;
    j["verdict"] = to_string(r.verdict);
    j["reason"] = r.reason;
    j["limit"] = r.limit ? number(*r.limit) : json(nullptr);
    json table = json::array();
    for (const BlowupRow& row : r.table)
        table.push_back({{"k", row.k}, {"n", row.n}, {"min_integral", number(row.min_integral)},
                         {"increment", number(row.increment)}});
    j["table"] = table;
    return j;
}

json to_json(const TangentialReport& r)
{
    return {{"estimate", number(r.estimate)},
            {"s_at_max", r.s_at_max},
            {"still_growing", r.still_growing},
            {"violated", r.violated}};
}

json to_json(const ComparisonReport& r)
{
    return {{"meets", r.meets},
            {"min_value", number(r.min_value)},
            {"witness", {{"x", r.witness.x}, {"y", r.witness.y}, {"n", r.witness_n}, {"s", r.witness_s}}}};
}

json to_json(const HypothesisReport& r)
{
    return {{"blowup", to_json(r.blowup)},
            {"tangential", to_json(r.tangential)},
            {"comparison", to_json(r.comparison)},
            {"blowup_and_tangential_conditions", r.conditions_met},
            {"inverse_square_comparison", r.comparison_meets}};
}

json to_json(const CollarDecomposition& d)
{
    return {{"M", d.M},
            {"alpha", d.alpha},
            {"C_f", number(d.C_f)},
            {"exact", d.exact},
            {"remainder_bounded", d.remainder_bounded},
            {"bounded_blowup_form", d.bounded_blowup_form},
            {"note", d.note}};
}

namespace {

constexpr std::array<const char*, 10> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    if (std::string_view(buf) == "-0.000")
        return "0.000";
    return buf;
}

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string render_svg(const PlotInput& input)
{
    constexpr double size = 600.0, margin = 20.0, caption_height = 40.0;
    double extent = 1e-300;
    for (const auto& c : input.boundary)
        extent = std::max({extent, std::abs(c.center.x) + c.radius, std::abs(c.center.y) + c.radius});
    for (const auto& path : input.paths)
        for (Vec2 p : path)
            extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    const double scale = (size / 2.0 - margin) / extent;
    auto X = [&](double x) { return fixed(size / 2.0 + scale * x); };
    auto Y = [&](double y) { return fixed(size / 2.0 - scale * y); };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << size << "\" height=\""
       << size + caption_height << "\" viewBox=\"0 0 " << size << ' ' << size + caption_height << "\">\n";
    os << "<title>" << escape_xml(input.caption) << "</title>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size + caption_height
       << "\" fill=\"white\"/>\n";
    for (const auto& c : input.boundary)
        os << "<circle cx=\"" << X(c.center.x) << "\" cy=\"" << Y(c.center.y) << "\" r=\"" << fixed(scale * c.radius)
           << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < input.paths.size(); ++i) {
        const auto& path = input.paths[i];
        if (path.empty())
            continue;
        const char* colour = palette[i % palette.size()];
        const bool stationary = std::all_of(path.begin(), path.end(),
                                            [&](Vec2 p) { return p.x == path[0].x && p.y == path[0].y; });
        if (stationary) {
            os << "<circle cx=\"" << X(path[0].x) << "\" cy=\"" << Y(path[0].y) << "\" r=\"3\" fill=\"" << colour
               << "\"/>\n";
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"";
        for (std::size_t k = 0; k < path.size(); ++k)
            os << (k ? " " : "") << X(path[k].x) << ',' << Y(path[k].y);
        os << "\"/>\n";
    }
    os << "<text x=\"" << fixed(size / 2.0) << "\" y=\"" << fixed(size + caption_height / 2.0)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << escape_xml(input.caption)
       << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace magconf
