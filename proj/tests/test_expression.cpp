#include <doctest.h>

#include <cmath>
#include <random>

#include "magconf/errors.hpp"
#include "magconf/expression.hpp"

using namespace magconf;

TEST_CASE("parse and evaluate")
{
    const Vec2 q{0.3, -0.4};
    CHECK(Expression::parse("1/(1-r)").evaluate(q) == doctest::Approx(2.0));
    CHECK(Expression::parse("2^3^2").evaluate(q) == doctest::Approx(512.0));
    CHECK(Expression::parse("-x^2").evaluate(q) == doctest::Approx(-0.09));
    CHECK(Expression::parse("2**-1").evaluate(q) == doctest::Approx(0.5));
    CHECK(Expression::parse(" 1e-1 * 3 ").evaluate(q) == doctest::Approx(0.3));
    CHECK(Expression::parse("sqrt(4) + sin(0) + cos(0) + exp(0) + log(1)").evaluate(q) == doctest::Approx(4.0));
    CHECK(Expression::parse("pi").evaluate(q) == doctest::Approx(3.141592653589793));
    CHECK(Expression::parse("M/(1-r)^a", {{"M", 2.0}, {"a", 2.0}}).evaluate(q) == doctest::Approx(8.0));
    CHECK(Expression::parse("1 + 2*3").constant_value() == doctest::Approx(7.0));
    CHECK_FALSE(Expression::parse("x + 1").constant_value());
}

TEST_CASE("parse errors carry the position")
{
    auto position_of = [](const char* text) -> std::size_t {
        try {
            Expression::parse(text);
        } catch (const ParseError& e) {
            return e.position();
        }
        return std::string::npos;
    };
    CHECK(position_of("1 + ") == 4);
    CHECK(position_of("(x + 1") == 6);
    CHECK(position_of("x $ y") == 2);
    CHECK(position_of("1 + tan(x)") == 4);
    CHECK(position_of("z * 2") == 0);
    CHECK(position_of("1..2") == 0);
    try {
        Expression::parse("1 + tan(x)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("unsupported function 'tan'") != std::string::npos);
        CHECK(std::string(e.what()).find("position 4") != std::string::npos);
    }
}

TEST_CASE("symbolic derivatives match finite differences")
{
    const char* fields[] = {"1/(1-r) + 7*y + 5*x^2", "1/(1-r) + 10*x - 2*x^2 - 10*y^3", "1/sqrt(1-r)",
                            "(2*(1-r) + y)/(1-r)^3", "exp(x*y) * log(2 + r) - cos(3*x)*y"};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (const char* text : fields) {
        const Expression e = Expression::parse(text);
        const Expression ex = e.d_dx(), ey = e.d_dy(), et = e.d_dtheta();
        for (int i = 0; i < 20; ++i) {
            const Vec2 q{u(rng), u(rng)};
            const double h = 1e-5;
            const double fx = (e.evaluate({q.x + h, q.y}) - e.evaluate({q.x - h, q.y})) / (2 * h);
            const double fy = (e.evaluate({q.x, q.y + h}) - e.evaluate({q.x, q.y - h})) / (2 * h);
            CHECK(ex.evaluate(q) == doctest::Approx(fx).epsilon(1e-6));
            CHECK(ey.evaluate(q) == doctest::Approx(fy).epsilon(1e-6));
            CHECK(et.evaluate(q) == doctest::Approx(-q.y * fx + q.x * fy).epsilon(1e-6));
        }
    }
}

TEST_CASE("compiled expressions agree with tree evaluation")
{
    const Expression e = Expression::parse("1/(1-r) + 10*x - 2*x^2 - 10*y^3 + sqrt(r)*sin(y)");
    const CompiledExpression c(e);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (int i = 0; i < 100; ++i) {
        const Vec2 q{u(rng), u(rng)};
        CHECK(c(q) == e.evaluate(q));
    }
}

TEST_CASE("boundary template split")
{
    const auto fig1 = split_boundary_terms(Expression::parse("1/(1-r)"), 1.0, true);
    REQUIRE(fig1);
    REQUIRE(fig1->singular.size() == 1);
    CHECK(fig1->singular[0].coefficient == doctest::Approx(1.0));
    CHECK(fig1->singular[0].exponent == doctest::Approx(1.0));
    CHECK(fig1->regular.constant_value() == doctest::Approx(0.0));

    const auto fig3 = split_boundary_terms(Expression::parse("1/sqrt(1-r)"), 1.0, true);
    REQUIRE(fig3);
    CHECK(fig3->singular[0].exponent == doctest::Approx(0.5));

    const auto annulus = Expression::parse("M/(3-r)^2 + M1/(r-1)^1.5 + 0.5*x", {{"M", 2.0}, {"M1", 3.0}});
    const auto outer = split_boundary_terms(annulus, 3.0, true);
    const auto inner = split_boundary_terms(annulus, 1.0, false);
    REQUIRE(outer);
    REQUIRE(inner);
    CHECK(outer->singular[0].coefficient == doctest::Approx(2.0));
    CHECK(outer->singular[0].exponent == doctest::Approx(2.0));
    CHECK(inner->singular[0].coefficient == doctest::Approx(3.0));
    CHECK(inner->singular[0].exponent == doctest::Approx(1.5));

    CHECK_FALSE(split_boundary_terms(Expression::parse("x + y"), 1.0, true));
}

TEST_CASE("boundary distance rewrite is exact near the boundary")
{
    const Expression e = Expression::parse("1/(1-r) + 2/(r-1)^2 + x");
    const Expression d = with_boundary_distance(e, 1.0, true);
    const CompiledExpression c(d);
    const double dist = 1e-13;
    const double r = 1.0 - dist;
    const Vec2 q{r, 0.0};
    CHECK(c(q, r, dist) == doctest::Approx(1.0 / dist + 2.0 / (dist * dist) + r).epsilon(1e-14));
    CHECK(std::isnan(d.evaluate(q)));
    CHECK_THROWS_AS(d.d_dx(), Error);
}
