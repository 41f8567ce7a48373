#include "magconf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "magconf/errors.hpp"

namespace magconf {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Proper or touching intersection of segments [a, b] and [c, d].
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d)
{
    const double scale = std::max({norm(b - a), norm(d - c), 1e-300});
    const double tol = 1e-12 * scale * scale;
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    const bool straddle_ab = (d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol);
    const bool straddle_cd = (d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol);
    if (straddle_ab && straddle_cd)
        return true;
    auto on_segment = [tol](Vec2 p, Vec2 q, Vec2 r, double side) {
        // r collinear with [p, q] and inside its bounding box
        return std::abs(side) <= tol && std::min(p.x, q.x) - 1e-12 <= r.x && r.x <= std::max(p.x, q.x) + 1e-12
               && std::min(p.y, q.y) - 1e-12 <= r.y && r.y <= std::max(p.y, q.y) + 1e-12;
    };
    return on_segment(a, b, c, d1) || on_segment(a, b, d, d2) || on_segment(c, d, a, d3)
           || on_segment(c, d, b, d4);
}

} // namespace

BoundaryCurve BoundaryCurve::generic(double length, CurveFunctions functions, double normal_sign)
{
    if (!(length > 0.0))
        throw ChartError("curve length must be positive");
    if (!functions.point || !functions.tangent || !functions.curvature || !functions.curvature_derivative)
        throw ChartError("generic curve needs point, tangent, curvature and curvature derivative");
    BoundaryCurve c;
    c.length_ = length;
    c.normal_sign_ = normal_sign >= 0.0 ? 1.0 : -1.0;
    c.functions_ = std::move(functions);
    return c;
}

BoundaryCurve make_circle(Vec2 center, double radius, CircleSide side)
{
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw ChartError("circle radius must be positive");
    BoundaryCurve c;
    c.length_ = two_pi * radius;
    c.normal_sign_ = side == CircleSide::normal_toward_center ? 1.0 : -1.0;
    c.circle_ = CircleData{center, radius, side};
    return c;
}

Vec2 BoundaryCurve::point(double s) const
{
    if (circle_) {
        const double t = s / circle_->radius;
        return circle_->center + circle_->radius * Vec2{std::cos(t), std::sin(t)};
    }
    return functions_.point(s);
}

Vec2 BoundaryCurve::tangent(double s) const
{
    if (circle_) {
        const double t = s / circle_->radius;
        return {-std::sin(t), std::cos(t)};
    }
    return functions_.tangent(s);
}

Vec2 BoundaryCurve::normal(double s) const
{
    return normal_sign_ * rotate90(tangent(s));
}

double BoundaryCurve::curvature(double s) const
{
    if (circle_)
        return normal_sign_ / circle_->radius;
    return functions_.curvature(s);
}

double BoundaryCurve::curvature_derivative(double s) const
{
    if (circle_)
        return 0.0;
    return functions_.curvature_derivative(s);
}

CurvatureBounds curvature_bounds(const BoundaryCurve& curve, int samples)
{
    if (curve.circle())
        return {1.0 / curve.circle()->radius, 0.0};
    CurvatureBounds b;
    const double h = curve.length() / samples;
    for (int i = 0; i < samples; ++i) {
        b.K = std::max(b.K, std::abs(curve.curvature(i * h)));
        b.K_prime = std::max(b.K_prime, std::abs(curve.curvature_derivative(i * h)));
    }
    return b;
}

std::optional<std::string> validate_collar(const BoundaryCurve& curve, double width, double epsilon)
{
    std::vector<std::string> problems;
    if (!(epsilon > 0.0 && epsilon < 1.0))
        problems.push_back("epsilon outside (0, 1)");
    if (!(width > 0.0) || !std::isfinite(width))
        problems.push_back("collar width must be positive");
    if (!problems.empty()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < problems.size(); ++i)
            os << (i ? "; " : "") << problems[i];
        return os.str();
    }

    // Normal segments [gamma(s_i), gamma(s_i) + N nu(s_i)] must be pairwise disjoint.
    constexpr int segments = 256;
    std::vector<Vec2> base(segments), tip(segments);
    const double h = curve.length() / segments;
    for (int i = 0; i < segments; ++i) {
        base[i] = curve.point(i * h);
        tip[i] = base[i] + width * curve.normal(i * h);
    }
    bool injective = true;
    for (int i = 0; i < segments && injective; ++i) {
        for (int j = i + 2; j < segments; ++j) {
            if (i == 0 && j == segments - 1)
                continue;
            // start just inside the curve so neighbouring feet do not count
            const Vec2 a = base[i] + 1e-9 * (tip[i] - base[i]);
            const Vec2 c = base[j] + 1e-9 * (tip[j] - base[j]);
            if (segments_intersect(a, tip[i], c, tip[j])) {
                injective = false;
                break;
            }
        }
    }
    if (!injective)
        problems.push_back("chart not injective: normal segments of length N intersect");

    const double K = curvature_bounds(curve).K;
    if (K > 0.0 && !(width < epsilon / K)) {
        std::ostringstream os;
        os << "N >= eps/K (N = " << width << ", eps/K = " << epsilon / K << ")";
        problems.push_back(os.str());
    }

    if (problems.empty())
        return std::nullopt;
    std::ostringstream os;
    for (std::size_t i = 0; i < problems.size(); ++i)
        os << (i ? "; " : "") << problems[i];
    return os.str();
}

double default_collar_width(const BoundaryCurve& curve, double requested, double epsilon)
{
    const double K = curvature_bounds(curve).K;
    if (K == 0.0)
        return requested;
    return std::min(requested, 0.99 * epsilon / K);
}

CollarChart::CollarChart(BoundaryCurve curve, double width, double epsilon)
    : curve_(std::move(curve)), width_(width), epsilon_(epsilon), bounds_(curvature_bounds(curve_))
{
    if (auto problem = validate_collar(curve_, width_, epsilon_))
        throw ChartError("invalid collar: " + *problem);
}

Vec2 CollarChart::map(double n, double s) const
{
    return curve_.point(s) + n * curve_.normal(s);
}

Vec2 CollarChart::from_normal(double n, double s) const
{
    if (!(n > 0.0 && n < width_))
        throw ChartError("normal coordinate n outside (0, N)");
    return map(n, s);
}

double CollarChart::wrap(double s) const
{
    const double L = curve_.length();
    double w = std::fmod(s, L);
    if (w < 0.0)
        w += L;
    if (w >= L)
        w = 0.0;
    return w;
}

std::optional<NormalCoords> CollarChart::to_normal(Vec2 q) const
{
    if (const auto& c = curve_.circle()) {
        const Vec2 d = q - c->center;
        const double r = norm(d);
        const double n = c->side == CircleSide::normal_toward_center ? c->radius - r : r - c->radius;
        if (!(n > 0.0 && n < width_) || r == 0.0)
            return std::nullopt;
        return NormalCoords{n, wrap(c->radius * std::atan2(d.y, d.x))};
    }

    // coarse scan, then safeguarded Newton on g(s) = (q - gamma(s)) . gamma'(s)
    const double L = curve_.length();
    constexpr int samples = 1024;
    const double h = L / samples;
    int best = 0;
    double best_d2 = INFINITY;
    for (int i = 0; i < samples; ++i) {
        const Vec2 d = q - curve_.point(i * h);
        const double d2 = dot(d, d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    auto g = [&](double s) { return dot(q - curve_.point(s), curve_.tangent(s)); };
    double lo = (best - 1) * h, hi = (best + 1) * h;
    double glo = g(lo), ghi = g(hi);
    double s = best * h;
    if (glo > 0.0 && ghi < 0.0) {
        for (int it = 0; it < 100; ++it) {
            const double gs = g(s);
            if (gs > 0.0)
                lo = s;
            else
                hi = s;
            const Vec2 d = q - curve_.point(s);
            const double dg = -1.0 + curve_.curvature(s) * dot(d, curve_.normal(s));
            double next = dg != 0.0 ? s - gs / dg : 0.5 * (lo + hi);
            if (!(next > lo && next < hi))
                next = 0.5 * (lo + hi);
            const double step = std::abs(next - s);
            s = next;
            if (step < 1e-13 * std::max(1.0, L) || hi - lo < 1e-13 * std::max(1.0, L))
                break;
        }
    }
    const Vec2 d = q - curve_.point(s);
    const double n = dot(d, curve_.normal(s));
    if (!(n > 0.0 && n < width_))
        return std::nullopt;
    return NormalCoords{n, wrap(s)};
}

double CollarChart::metric_factor(double n, double s) const
{
    if (!(n > 0.0 && n < width_))
        throw ChartError("normal coordinate n outside (0, N)");
    return 1.0 - curve_.curvature(s) * n;
}

double CollarChart::jacobian(double n, double s) const
{
    return curve_.orientation() * (1.0 - curve_.curvature(s) * n);
}

Domain Domain::disc(double radius, double width, double epsilon)
{
    Domain d;
    d.outer_radius_ = radius;
    d.components_.push_back({"outer", CollarChart(make_circle({0, 0}, radius, CircleSide::normal_toward_center),
                                                  width, epsilon)});
    return d;
}

Domain Domain::annulus(double inner_radius, double outer_radius, double inner_width, double inner_epsilon,
                       double outer_width, double outer_epsilon)
{
    if (!(inner_radius > 0.0 && inner_radius < outer_radius))
        throw ChartError("annulus requires 0 < R1 < R2");
    if (inner_width + outer_width > outer_radius - inner_radius)
        throw ChartError("inner and outer collars overlap");
    Domain d;
    d.inner_radius_ = inner_radius;
    d.outer_radius_ = outer_radius;
    d.components_.push_back(
        {"outer", CollarChart(make_circle({0, 0}, outer_radius, CircleSide::normal_toward_center), outer_width,
                              outer_epsilon)});
    d.components_.push_back(
        {"inner", CollarChart(make_circle({0, 0}, inner_radius, CircleSide::normal_away_from_center), inner_width,
                              inner_epsilon)});
    return d;
}

bool Domain::contains(Vec2 q) const
{
    return boundary_distance(q) > 0.0;
}

double Domain::boundary_distance(Vec2 q) const
{
    const double r = norm(q);
    double d = outer_radius_ - r;
    if (is_annulus())
        d = std::min(d, r - inner_radius_);
    return d;
}

std::pair<std::size_t, double> Domain::nearest_boundary(Vec2 q) const
{
    const double r = norm(q);
    const double outer = outer_radius_ - r;
    if (is_annulus() && r - inner_radius_ < outer)
        return {1, r - inner_radius_};
    return {0, outer};
}

std::optional<Domain::Location> Domain::locate(Vec2 q) const
{
    std::optional<Location> best;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        if (auto nc = components_[i].chart.to_normal(q)) {
            if (!best || nc->n < best->coords.n)
                best = Location{i, *nc};
        }
    }
    return best;
}

} // namespace magconf
