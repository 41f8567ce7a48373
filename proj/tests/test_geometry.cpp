#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "magconf/errors.hpp"
#include "magconf/geometry.hpp"

using namespace magconf;
using std::numbers::pi;

namespace {

double circular_gap(double a, double b, double L)
{
    const double d = std::fmod(std::abs(a - b), L);
    return std::min(d, L - d);
}

} // namespace

TEST_CASE("unit circle frame at s = 0")
{
    const auto c = make_circle({0, 0}, 1.0, CircleSide::normal_toward_center);
    CHECK(c.length() == doctest::Approx(2 * pi));
    CHECK(c.point(0).x == doctest::Approx(1.0));
    CHECK(c.point(0).y == doctest::Approx(0.0));
    CHECK(c.normal(0).x == doctest::Approx(-1.0));
    CHECK(c.normal(0).y == doctest::Approx(0.0));
    CHECK(c.curvature(0) == 1.0);
    CHECK(c.curvature_derivative(0) == 0.0);
}

TEST_CASE("circle curvature sign and scaling")
{
    CHECK(make_circle({0, 0}, 2.0, CircleSide::normal_toward_center).curvature(1.3) == doctest::Approx(0.5));
    const auto inner = make_circle({0, 0}, 1.0, CircleSide::normal_away_from_center);
    CHECK(inner.curvature(0.4) == doctest::Approx(-1.0));
    const CollarChart chart(inner, 0.5, 0.6);
    CHECK(chart.metric_factor(0.3, 0.0) == doctest::Approx(1.3));
    CHECK_THROWS_AS(make_circle({0, 0}, 0.0, CircleSide::normal_toward_center), ChartError);
    CHECK_THROWS_AS(make_circle({0, 0}, -1.0, CircleSide::normal_toward_center), ChartError);
}

TEST_CASE("frame invariants and gamma'' = kappa nu")
{
    for (const auto side : {CircleSide::normal_toward_center, CircleSide::normal_away_from_center}) {
        const auto c = make_circle({0.3, -0.2}, 1.7, side);
        auto second_difference = [&](double s, double h) {
            return (1.0 / (h * h)) * (c.point(s + h) - 2.0 * c.point(s) + c.point(s - h));
        };
        for (int i = 0; i < 50; ++i) {
            const double s = c.length() * i / 50.0;
            const Vec2 t = c.tangent(s), nu = c.normal(s);
            CHECK(norm(t) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(norm(nu) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(std::abs(dot(t, nu)) < 1e-14);
            // Richardson-extrapolated second difference
            const Vec2 second = (1.0 / 3.0) * (4.0 * second_difference(s, 1e-3) - second_difference(s, 2e-3));
            CHECK(norm(second - c.curvature(s) * nu) < 1e-8);
            CHECK(norm(c.point(s + c.length()) - c.point(s)) < 1e-12);
        }
    }
}

TEST_CASE("from_normal examples")
{
    const CollarChart disc(make_circle({0, 0}, 1.0, CircleSide::normal_toward_center), 0.5, 0.6);
    const Vec2 a = disc.from_normal(0.5 - 1e-15, 0.0);
    CHECK(a.x == doctest::Approx(0.5));
    const Vec2 b = disc.from_normal(0.25, pi / 2);
    CHECK(b.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(b.y == doctest::Approx(0.75));
    const CollarChart inner(make_circle({0, 0}, 1.0, CircleSide::normal_away_from_center), 0.5, 0.6);
    const Vec2 c = inner.from_normal(0.1, 0.0);
    CHECK(c.x == doctest::Approx(1.1));
    CHECK(c.y == doctest::Approx(0.0));
    CHECK_THROWS_AS(disc.from_normal(0.0, 0.0), ChartError);
    CHECK_THROWS_AS(disc.from_normal(0.6, 0.0), ChartError);
}

TEST_CASE("to_normal examples")
{
    const CollarChart disc(make_circle({0, 0}, 1.0, CircleSide::normal_toward_center), 0.6, 0.7);
    const auto a = disc.to_normal({0.5, 0.0});
    REQUIRE(a);
    CHECK(a->n == doctest::Approx(0.5));
    CHECK(circular_gap(a->s, 0.0, 2 * pi) < 1e-12);
    const auto b = disc.to_normal({0.0, 0.9});
    REQUIRE(b);
    CHECK(b->n == doctest::Approx(0.1));
    CHECK(b->s == doctest::Approx(pi / 2));
    CHECK_FALSE(disc.to_normal({0.1, 0.0}));
    CHECK_FALSE(disc.to_normal({1.1, 0.0}));
}

TEST_CASE("metric factor examples")
{
    const CollarChart disc(make_circle({0, 0}, 1.0, CircleSide::normal_toward_center), 0.5, 0.6);
    CHECK(disc.metric_factor(0.3, 1.0) == doctest::Approx(0.7));
    CHECK(disc.metric_factor(1e-12, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(disc.metric_factor(0.7, 1.0), ChartError);
}

TEST_CASE("validate_collar")
{
    const auto unit = make_circle({0, 0}, 1.0, CircleSide::normal_toward_center);
    CHECK_FALSE(validate_collar(unit, 0.5, 0.6));
    const auto small_eps = validate_collar(unit, 0.5, 0.4);
    REQUIRE(small_eps);
    CHECK(small_eps->find("N >= eps/K") != std::string::npos);
    CHECK(validate_collar(unit, 1.2, 0.9));
    CHECK_THROWS_AS(CollarChart(unit, 0.5, 0.4), ChartError);
    CHECK(default_collar_width(unit, 5.0, 0.5) == doctest::Approx(0.495));
    CHECK(default_collar_width(unit, 0.2, 0.5) == 0.2);
}

TEST_CASE("round trip and nearest distance on random chart points")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Domain annulus = Domain::annulus(1.0, 3.0, 0.4, 0.5, 0.9, 0.5);
    const Domain disc = Domain::disc(1.0, 0.5, 0.6);
    for (const Domain* d : {&disc, &annulus}) {
        for (const auto& comp : d->components()) {
            const CollarChart& chart = comp.chart;
            const double L = chart.curve().length();
            for (int i = 0; i < 2000; ++i) {
                const double n = chart.width() * (1e-6 + (1 - 2e-6) * u(rng));
                const double s = L * u(rng);
                const Vec2 q = chart.from_normal(n, s);
                const auto back = chart.to_normal(q);
                REQUIRE(back);
                CHECK(std::abs(back->n - n) < 1e-10);
                CHECK(circular_gap(back->s, s, L) < 1e-10);
                const double f = chart.metric_factor(n, s);
                CHECK(f > 1 - chart.epsilon());
                CHECK(f < 1 + chart.epsilon());
            }
        }
    }
}

TEST_CASE("to_normal distance matches a dense scan of the curve")
{
    const CollarChart chart(make_circle({0.2, 0.1}, 1.5, CircleSide::normal_toward_center), 0.6, 0.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const Vec2 q = chart.from_normal(0.6 * (0.01 + 0.98 * u(rng)), chart.curve().length() * u(rng));
        const auto c = chart.to_normal(q);
        REQUIRE(c);
        // golden-section refine around the best of a dense scan
        const double L = chart.curve().length();
        const int samples = 20000;
        int best = 0;
        double best_d = INFINITY;
        for (int k = 0; k < samples; ++k) {
            const double d = norm(q - chart.curve().point(L * k / samples));
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        double a = L * (best - 1) / samples, b = L * (best + 1) / samples;
        auto dist = [&](double s) { return norm(q - chart.curve().point(s)); };
        for (int it = 0; it < 200; ++it) {
            const double m1 = a + (b - a) * 0.381966, m2 = b - (b - a) * 0.381966;
            if (dist(m1) < dist(m2))
                b = m2;
            else
                a = m1;
        }
        CHECK(std::abs(dist(0.5 * (a + b)) - c->n) < 1e-10);
    }
}

TEST_CASE("domain location")
{
    const Domain annulus = Domain::annulus(1.0, 3.0, 0.4, 0.5, 0.9, 0.5);
    CHECK(annulus.is_annulus());
    CHECK(annulus.contains({2.0, 0.0}));
    CHECK_FALSE(annulus.contains({0.5, 0.0}));
    const auto inner = annulus.locate({1.1, 0.0});
    REQUIRE(inner);
    CHECK(annulus.components()[inner->component].name == "inner");
    CHECK(inner->coords.n == doctest::Approx(0.1));
    CHECK_FALSE(annulus.locate({1.8, 0.0}));
    CHECK(annulus.boundary_distance({2.5, 0.0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(Domain::annulus(1.0, 2.0, 0.6, 0.5, 0.6, 0.5), ChartError);
}
