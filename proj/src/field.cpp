#include "magconf/field.hpp"

#include <algorithm>
#include <cmath>

#include "magconf/errors.hpp"

namespace magconf {

namespace {

// int_a^b c m^-p dm
double power_integral(double c, double p, double a, double b)
{
    if (c == 0.0)
        return 0.0;
    if (p == 1.0)
        return c * std::log(b / a);
    return c * (std::pow(b, 1.0 - p) - std::pow(a, 1.0 - p)) / (1.0 - p);
}

bool same(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

FieldSpec build_field(std::string_view expression, const std::map<std::string, double>& parameters)
{
    Expression e = Expression::parse(expression, parameters);
    FieldSpec f;
    f.source = std::string(expression);
    f.expression = e;
    CompiledExpression value(e);
    CompiledExpression dx(e.d_dx());
    CompiledExpression dy(e.d_dy());
    f.value = [value](Vec2 q) { return value(q); };
    f.gradient = [dx, dy](Vec2 q) { return Vec2{dx(q), dy(q)}; };
    return f;
}

FieldSpec field_from_callable(std::string label, std::function<double(Vec2)> value,
                              std::function<Vec2(Vec2)> gradient)
{
    FieldSpec f;
    f.source = std::move(label);
    f.value = std::move(value);
    f.gradient = std::move(gradient);
    return f;
}

double eval_cartesian(const FieldSpec& field, Vec2 q)
{
    const double b = field.value(q);
    if (!std::isfinite(b))
        throw FieldSingular("field is not finite at (" + std::to_string(q.x) + ", " + std::to_string(q.y) + ")");
    return b;
}

CollarField::CollarField(FieldSpec field, CollarChart chart, DeclaredCollar declared)
    : field_(std::move(field)), chart_(std::move(chart)), declared_(declared)
{
    if (field_.expression) {
        compiled_ = CompiledExpression(*field_.expression);
        if (const auto& c = chart_.curve().circle()) {
            const Expression dtheta = field_.expression->d_dtheta(c->center);
            tangential_ = CompiledExpression(dtheta);
            if (c->center == Vec2{0.0, 0.0}) {
                const bool outer = c->side == CircleSide::normal_toward_center;
                distance_form_ = true;
                compiled_ = CompiledExpression(with_boundary_distance(*field_.expression, c->radius, outer));
                tangential_ = CompiledExpression(with_boundary_distance(dtheta, c->radius, outer));
            }
        } else {
            gx_ = CompiledExpression(field_.expression->d_dx());
            gy_ = CompiledExpression(field_.expression->d_dy());
        }
    }
    derive_decomposition();
}

CollarField::CirclePoint CollarField::circle_point(double n, double s) const
{
    const CircleData& c = *chart_.curve().circle();
    const double r = c.side == CircleSide::normal_toward_center ? c.radius - n : c.radius + n;
    const double t = s / c.radius;
    return {{r * std::cos(t), r * std::sin(t)}, r, n};
}

double CollarField::density(double n, double s) const
{
    if (distance_form_) {
        const auto p = circle_point(n, s);
        return chart_.jacobian(n, s) * compiled_(p.q, p.r, p.d);
    }
    const Vec2 q = chart_.map(n, s);
    const double b = compiled_.empty() ? field_.value(q) : compiled_(q);
    return chart_.jacobian(n, s) * b;
}

double CollarField::density_ds(double n, double s) const
{
    const BoundaryCurve& curve = chart_.curve();
    if (distance_form_) {
        const auto p = circle_point(n, s);
        return chart_.jacobian(n, s) * tangential_(p.q, p.r, p.d) / curve.circle()->radius;
    }
    const Vec2 q = chart_.map(n, s);
    if (symbolic_tangential())
        return chart_.jacobian(n, s) * tangential_(q) / curve.circle()->radius;

    std::optional<Vec2> grad;
    if (!gx_.empty())
        grad = Vec2{gx_(q), gy_(q)};
    else if (field_.gradient)
        grad = field_.gradient(q);
    if (grad) {
        const double metric = 1.0 - curve.curvature(s) * n;
        const double db_ds = metric * dot(*grad, curve.tangent(s));
        const double dj_ds = -curve.orientation() * curve.curvature_derivative(s) * n;
        const double b = compiled_.empty() ? field_.value(q) : compiled_(q);
        return chart_.jacobian(n, s) * db_ds + b * dj_ds;
    }
    const double h = 1e-5 * curve.length();
    return (density(n, s + h) - density(n, s - h)) / (2.0 * h);
}

double CollarField::regular_part(double n, double s) const
{
    if (!has_regular_)
        return 0.0;
    const auto p = circle_point(n, s);
    return chart_.jacobian(n, s) * regular_(p.q, p.r, p.d);
}

double CollarField::regular_part_ds(double n, double s) const
{
    if (!has_regular_)
        return 0.0;
    const auto p = circle_point(n, s);
    return chart_.jacobian(n, s) * regular_tangential_(p.q, p.r, p.d) / chart_.curve().circle()->radius;
}

double CollarField::remainder(double n, double s) const
{
    if (!decomposition_)
        throw Error("field has no collar decomposition on this chart");
    if (decomposition_->exact) {
        double f = regular_part(n, s);
        for (const Power& p : remainder_powers_)
            f += p.coefficient * std::pow(n, -p.exponent);
        return f;
    }
    return density(n, s) - decomposition_->M * std::pow(n, -decomposition_->alpha);
}

double CollarField::remainder_ds(double n, double s) const
{
    if (!decomposition_)
        throw Error("field has no collar decomposition on this chart");
    if (decomposition_->exact)
        return regular_part_ds(n, s);
    return density_ds(n, s);
}

double CollarField::flux(double a, double b, double s) const
{
    if (!(a > 0.0 && a <= b))
        throw ChartError("flux needs 0 < a <= b");
    if (a == b)
        return 0.0;
    if (decomposition_ && decomposition_->exact) {
        double total = power_integral(decomposition_->M, decomposition_->alpha, a, b);
        for (const Power& p : remainder_powers_)
            total += power_integral(p.coefficient, p.exponent, a, b);
        if (has_regular_) {
            // only the sum needs relative accuracy; g may cancel to ~0 along some rays
            QuadratureOptions q = quad_;
            q.abs_tol = std::max({q.abs_tol, 1e-14 * std::abs(total), 1e-13 * (b - a)});
            total += integrate_or_throw([&](double m) { return regular_part(m, s); }, a, b, q);
        }
        return total;
    }
    auto r = integrate_log([&](double m) { return density(m, s); }, a, b, quad_);
    if (!r.converged)
        throw QuadratureError("potential quadrature did not converge", r.error);
    return r.value;
}

double CollarField::potential(double n, double s) const
{
    if (!(n > 0.0 && n <= chart_.width()))
        throw ChartError("normal coordinate n outside (0, N]");
    return -flux(n, chart_.width(), s);
}

double CollarField::potential_ds(double n, double s) const
{
    if (!(n > 0.0 && n <= chart_.width()))
        throw ChartError("normal coordinate n outside (0, N]");
    const double N = chart_.width();
    if (n == N)
        return 0.0;
    if (decomposition_ && decomposition_->exact) {
        if (!has_regular_)
            return 0.0;
        // absolute floor per unit length: the integrand may cancel to rounding level
        QuadratureOptions q = quad_;
        q.abs_tol = std::max(q.abs_tol, 1e-13 * (N - n));
        return -integrate_or_throw([&](double m) { return regular_part_ds(m, s); }, n, N, q);
    }
    auto r = integrate_log([&](double m) { return density_ds(m, s); }, n, N, quad_);
    if (!r.converged)
        throw QuadratureError("tangential potential quadrature did not converge", r.error);
    return -r.value;
}

void CollarField::derive_decomposition()
{
    const auto& circle = chart_.curve().circle();
    if (circle && field_.expression) {
        const bool outer = circle->side == CircleSide::normal_toward_center;
        // distance to the boundary is |r - R| only for circles about the origin
        std::optional<BoundarySplit> split;
        if (circle->center == Vec2{0.0, 0.0})
            split = split_boundary_terms(*field_.expression, circle->radius, outer);
        if (split) {
            // J c / n^a = sigma c n^-a - sigma kappa c n^(1-a)
            const double sigma = chart_.curve().orientation();
            const double kappa = chart_.curve().curvature(0.0);
            std::vector<Power> powers;
            auto add = [&powers](double c, double p) {
                for (Power& q : powers)
                    if (same(q.exponent, p)) {
                        q.coefficient += c;
                        return;
                    }
                powers.push_back({c, p});
            };
            double scale = 0.0;
            for (const SingularTerm& t : split->singular) {
                add(sigma * t.coefficient, t.exponent);
                add(-sigma * kappa * t.coefficient, t.exponent - 1.0);
                scale = std::max(scale, std::abs(t.coefficient));
            }
            std::erase_if(powers, [scale](const Power& p) { return std::abs(p.coefficient) <= 1e-14 * scale; });
            std::sort(powers.begin(), powers.end(),
                      [](const Power& a, const Power& b) { return a.exponent > b.exponent; });
            if (!powers.empty() && powers.front().exponent > 0.0) {
                CollarDecomposition d;
                d.exact = true;
                d.M = powers.front().coefficient;
                d.alpha = powers.front().exponent;
                remainder_powers_.assign(powers.begin() + 1, powers.end());
                for (const Power& p : remainder_powers_)
                    if (p.exponent > 0.0) {
                        d.remainder_bounded = false;
                        d.note = "remainder has a singular term of order n^-" + std::to_string(p.exponent);
                    }
                if (!split->regular.is_constant() || split->regular.node().value != 0.0) {
                    has_regular_ = true;
                    regular_ = CompiledExpression(with_boundary_distance(split->regular, circle->radius, outer));
                    regular_tangential_ = CompiledExpression(
                        with_boundary_distance(split->regular.d_dtheta(circle->center), circle->radius, outer));
                }
                decomposition_ = d;
            }
        }
    }

    if (declared_.M && declared_.alpha) {
        // declared values may use the unsigned convention; only |M| is compared
        const bool agrees = decomposition_ && same(std::abs(decomposition_->M), std::abs(*declared_.M))
                            && same(decomposition_->alpha, *declared_.alpha);
        if (!agrees) {
            CollarDecomposition d;
            d.exact = false;
            d.M = *declared_.M;
            d.alpha = *declared_.alpha;
            d.note = "declared";
            // the signed density fixes the sign of M; a declared magnitude with the other sign is flipped
            const double probe = density(chart_.width() * 0x1.0p-20, 0.0);
            if (std::isfinite(probe) && probe != 0.0 && (probe > 0.0) != (d.M > 0.0)) {
                d.M = -d.M;
                d.note = "declared (sign of M taken from the density)";
            }
            remainder_powers_.clear();
            has_regular_ = false;
            decomposition_ = d;
        }
    }

    if (!decomposition_)
        return;

    CollarDecomposition& d = *decomposition_;
    if (declared_.C_f) {
        d.C_f = *declared_.C_f;
    } else if (d.remainder_bounded) {
        // sup |f| on a dense grid; a numerical remainder loses digits near n = 0
        const double N = chart_.width();
        const double L = chart_.curve().length();
        const int deepest = d.exact ? 40 : 20;
        std::vector<double> ns;
        for (int k = 1; k <= deepest; ++k)
            ns.push_back(N * std::ldexp(1.0, -k));
        for (int i = 0; i < 64; ++i)
            ns.push_back(N * (i + 0.5) / 64.0);
        double sup = 0.0;
        for (int j = 0; j < 128; ++j) {
            const double s = L * j / 128.0;
            for (double n : ns)
                sup = std::max(sup, std::abs(remainder(n, s)));
        }
        d.C_f = sup;
    }
    d.bounded_blowup_form = d.alpha >= 1.0 && d.M != 0.0 && d.remainder_bounded;
    if (d.alpha < 1.0 && d.note.empty())
        d.note = "blow-up exponent below 1";
}

std::string to_string(BlowupVerdict v)
{
    switch (v) {
    case BlowupVerdict::divergent: return "divergent";
    case BlowupVerdict::integrable: return "integrable";
    case BlowupVerdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

} // namespace magconf
