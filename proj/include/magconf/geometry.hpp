#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "magconf/vec2.hpp"

namespace magconf {

enum class CircleSide {
    normal_toward_center,   //!< outer boundary of a disc or annulus, kappa = +1/R
    normal_away_from_center //!< inner boundary of an annulus, kappa = -1/R
};

struct CircleData {
    Vec2 center;
    double radius = 1.0;
    CircleSide side = CircleSide::normal_toward_center;
};

//! Callables describing an arc-length parametrized closed curve.
struct CurveFunctions {
    std::function<Vec2(double)> point;
    std::function<Vec2(double)> tangent;
    std::function<double(double)> curvature;
    std::function<double(double)> curvature_derivative;
};

/*!
 * Closed plane curve parametrized by arc length s in [0, L), with inward unit
 * normal nu and signed curvature kappa defined by gamma'' = kappa * nu.
 *
 * Circles are evaluated in closed form; any other curve goes through the
 * callables supplied to `generic`.
 */
class BoundaryCurve {
public:
    //! `normal_sign` selects the inward side: nu = normal_sign * rotate90(gamma').
    static BoundaryCurve generic(double length, CurveFunctions functions, double normal_sign);

    double length() const { return length_; }
    Vec2 point(double s) const;
    Vec2 tangent(double s) const;
    Vec2 normal(double s) const;
    double curvature(double s) const;
    double curvature_derivative(double s) const;

    //! det[nu, gamma'], constant +-1 along the curve.
    double orientation() const { return -normal_sign_; }

    const std::optional<CircleData>& circle() const { return circle_; }

private:
    friend BoundaryCurve make_circle(Vec2 center, double radius, CircleSide side);
    BoundaryCurve() = default;

    double length_ = 0.0;
    double normal_sign_ = 1.0;
    std::optional<CircleData> circle_;
    CurveFunctions functions_;
};

//! Counter-clockwise arc-length parametrized circle; throws ChartError for radius <= 0.
BoundaryCurve make_circle(Vec2 center, double radius, CircleSide side);

struct NormalCoords {
    double n = 0.0;
    double s = 0.0;
};

//! sup|kappa| and sup|kappa'| over the curve (dense sampling for generic curves).
struct CurvatureBounds {
    double K = 0.0;
    double K_prime = 0.0;
};

CurvatureBounds curvature_bounds(const BoundaryCurve& curve, int samples = 4096);

/*!
 * Checks N < eps/K and injectivity of (n, s) -> gamma(s) + n nu(s) on
 * (0, N) x R/LZ. Returns a description of the first failing condition, or
 * nullopt when the collar is valid.
 */
std::optional<std::string> validate_collar(const BoundaryCurve& curve, double width, double epsilon);

//! min(requested, 0.99 eps/K).
double default_collar_width(const BoundaryCurve& curve, double requested, double epsilon);

//! Normal-coordinate chart of width N on one boundary component.
class CollarChart {
public:
    //! Throws ChartError if validate_collar reports a violation.
    CollarChart(BoundaryCurve curve, double width, double epsilon = 0.5);

    const BoundaryCurve& curve() const { return curve_; }
    double width() const { return width_; }
    double epsilon() const { return epsilon_; }
    const CurvatureBounds& bounds() const { return bounds_; }

    //! gamma(s) + n nu(s); throws ChartError unless 0 < n < N.
    Vec2 from_normal(double n, double s) const;

    //! Same map without the range check (used at the closed end n = N).
    Vec2 map(double n, double s) const;

    std::optional<NormalCoords> to_normal(Vec2 q) const;

    //! 1 - kappa(s) n; throws ChartError unless 0 < n < N.
    double metric_factor(double n, double s) const;

    //! Signed Jacobian det[dx/dn, dx/ds] = orientation * (1 - kappa n).
    double jacobian(double n, double s) const;

    //! Wrap s into [0, L).
    double wrap(double s) const;

private:
    BoundaryCurve curve_;
    double width_;
    double epsilon_;
    CurvatureBounds bounds_;
};

//! Bounded planar domain (disc or annulus) with one collar chart per boundary component.
class Domain {
public:
    struct Component {
        std::string name;
        CollarChart chart;
    };

    struct Location {
        std::size_t component = 0;
        NormalCoords coords;
    };

    static Domain disc(double radius, double width, double epsilon);
    static Domain annulus(double inner_radius, double outer_radius,
                          double inner_width, double inner_epsilon,
                          double outer_width, double outer_epsilon);

    bool is_annulus() const { return inner_radius_ > 0.0; }
    double inner_radius() const { return inner_radius_; }
    double outer_radius() const { return outer_radius_; }
    const std::vector<Component>& components() const { return components_; }

    bool contains(Vec2 q) const;

    //! Euclidean distance to the nearest boundary component (negative outside).
    double boundary_distance(Vec2 q) const;

    //! Index of the closest boundary component and the distance to it.
    std::pair<std::size_t, double> nearest_boundary(Vec2 q) const;

    //! Collar containing q, preferring the closer boundary.
    std::optional<Location> locate(Vec2 q) const;

private:
    Domain() = default;

    double inner_radius_ = 0.0;
    double outer_radius_ = 0.0;
    std::vector<Component> components_;
};

} // namespace magconf
