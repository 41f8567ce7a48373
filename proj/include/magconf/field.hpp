#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magconf/expression.hpp"
#include "magconf/geometry.hpp"
#include "magconf/parallel.hpp"
#include "magconf/quadrature.hpp"

namespace magconf {

/*!
 * Magnetic field B(x, y) dx^dy on a planar domain. Built either from an
 * expression (symbolic derivatives available) or from plain callables.
 */
struct FieldSpec {
    std::string source;
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;  //!< may be empty
    std::optional<Expression> expression;
};

//! Parse an expression in the field grammar; throws ParseError.
FieldSpec build_field(std::string_view expression, const std::map<std::string, double>& parameters = {});

FieldSpec field_from_callable(std::string label, std::function<double(Vec2)> value,
                              std::function<Vec2(Vec2)> gradient = {});

//! B(q); throws FieldSingular when the value is not finite.
double eval_cartesian(const FieldSpec& field, Vec2 q);

//! Collar-form values supplied by a scenario instead of being derived.
struct DeclaredCollar {
    std::optional<double> M;
    std::optional<double> alpha;
    std::optional<double> C_f;
    std::optional<double> D_C;
};

/*!
 * B~(n, s) = M / n^alpha + f(n, s) on one collar. `exact` decompositions come
 * from matching the boundary template and carry the remainder in closed form;
 * declared ones define f as the numerical difference B~ - M/n^alpha.
 */
struct CollarDecomposition {
    double M = 0.0;
    double alpha = 1.0;
    double C_f = 0.0;
    bool exact = false;
    bool remainder_bounded = true;
    //! alpha >= 1, M != 0 and a bounded remainder.
    bool bounded_blowup_form = false;
    std::string note;
};

/*!
 * A field restricted to one collar chart: the signed density
 * B~(n, s) = B(x(n, s)) * J(n, s), the potential A(n, s) = -int_n^N B~ dm and
 * their s-derivatives.
 *
 * J is the signed Jacobian of the chart, negative on the outer boundary of a
 * disc (dx^dy = (n - 1) dn^ds on the unit disc), positive on the inner
 * boundary of an annulus.
 */
class CollarField {
public:
    CollarField(FieldSpec field, CollarChart chart, DeclaredCollar declared = {});

    const FieldSpec& field() const { return field_; }
    const CollarChart& chart() const { return chart_; }
    const DeclaredCollar& declared() const { return declared_; }
    const std::optional<CollarDecomposition>& decomposition() const { return decomposition_; }

    double density(double n, double s) const;
    double density_ds(double n, double s) const;

    //! int_a^b B~(m, s) dm for 0 < a <= b <= N.
    double flux(double a, double b, double s) const;
    double potential(double n, double s) const;
    double potential_ds(double n, double s) const;

    //! Remainder f = B~ - M/n^alpha and its s-derivative (requires a decomposition).
    double remainder(double n, double s) const;
    double remainder_ds(double n, double s) const;

    QuadratureOptions quadrature() const { return quad_; }

private:
    struct Power {
        double coefficient;
        double exponent;  // term is coefficient / n^exponent
    };

    void derive_decomposition();
    double regular_part(double n, double s) const;
    double regular_part_ds(double n, double s) const;
    bool symbolic_tangential() const { return !tangential_.empty(); }
    // point, radius and distance for origin-centred circle charts
    struct CirclePoint {
        Vec2 q;
        double r;
        double d;
    };
    CirclePoint circle_point(double n, double s) const;

    FieldSpec field_;
    CollarChart chart_;
    DeclaredCollar declared_;
    QuadratureOptions quad_;

    CompiledExpression compiled_;
    CompiledExpression tangential_;       // d/dtheta of B about the circle centre
    CompiledExpression gx_, gy_;          // gradient for non-circular charts
    bool distance_form_ = false;          // compiled_ etc. use the exact boundary distance
    std::optional<CollarDecomposition> decomposition_;
    std::vector<Power> remainder_powers_;  // closed-form part of f (exact decompositions)
    CompiledExpression regular_;           // template remainder g(x, y)
    CompiledExpression regular_tangential_;
    bool has_regular_ = false;
};

enum class BlowupVerdict { divergent, integrable, inconclusive };

std::string to_string(BlowupVerdict v);

struct BlowupRow {
    int k = 0;
    double n = 0.0;
    double min_integral = 0.0;  //!< min over s of |int_n^N B~ dm|
    double increment = 0.0;     //!< change from the previous row
};

struct BlowupReport {
    BlowupVerdict verdict = BlowupVerdict::inconclusive;
    std::vector<BlowupRow> table;
    std::optional<double> limit;  //!< extrapolated improper integral when integrable
    std::string reason;
};

/*!
 * Non-integrability test for B~ along normal rays on the grid n_k = N 2^-k,
 * k = 0..decades, and `s_samples` uniform values of s. A heuristic: the
 * report carries the full evidence table.
 */
BlowupReport check_blowup_hypothesis(const CollarField& field, int decades = 40, double growth_threshold = 1e3,
                                     int s_samples = 32, Execution exec = Execution::parallel);

struct TangentialReport {
    double estimate = 0.0;  //!< sup_s int_{n_floor}^N |dB~/ds| dm (tail-extrapolated)
    double s_at_max = 0.0;
    bool still_growing = false;
    bool violated = false;
};

TangentialReport check_tangential_hypothesis(const CollarField& field, int s_samples = 64,
                                             Execution exec = Execution::parallel);

struct ComparisonReport {
    bool meets = true;
    double min_value = 0.0;  //!< smallest sampled |B| n^2
    Vec2 witness;
    double witness_n = 0.0;
    double witness_s = 0.0;
};

//! Samples |B(x, y)| n^2 >= 1 over an n x s grid of the chart.
ComparisonReport inverse_square_comparison(const CollarField& field, int n_samples = 64, int s_samples = 64);

} // namespace magconf
