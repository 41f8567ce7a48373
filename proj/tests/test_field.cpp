#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "magconf/errors.hpp"
#include "magconf/field.hpp"

using namespace magconf;
using std::numbers::pi;

namespace {

CollarChart unit_disc_chart(double N = 0.5, double eps = 0.6)
{
    return CollarChart(make_circle({0, 0}, 1.0, CircleSide::normal_toward_center), N, eps);
}

CollarField disc_collar(const char* expression, std::map<std::string, double> params = {}, DeclaredCollar d = {})
{
    return CollarField(build_field(expression, params), unit_disc_chart(), d);
}

} // namespace

TEST_CASE("cartesian evaluation examples")
{
    CHECK(eval_cartesian(build_field("1/(1-r)"), {0.5, 0.0}) == doctest::Approx(2.0));
    CHECK(eval_cartesian(build_field("1/sqrt(1-r)"), {0.0, 0.75}) == doctest::Approx(2.0));
    CHECK(eval_cartesian(build_field("a*(r-2)/(r-1)^2", {{"a", 0.5}}), {0.0, 0.0}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(eval_cartesian(build_field("1/(1-r)"), {1.0, 0.0}), FieldSingular);
    CHECK_THROWS_AS(build_field("1/(1-q)"), ParseError);
}

TEST_CASE("signed collar density on the unit disc")
{
    const auto fig1 = disc_collar("1/(1-r)");
    const auto balpha = disc_collar("a*(r-2)/(r-1)^2", {{"a", 0.5}});
    const auto constant = disc_collar("3");
    for (double n : {1e-9, 0.01, 0.25, 0.49}) {
        for (double s : {0.0, 1.0, 4.0}) {
            CHECK(fig1.density(n, s) == doctest::Approx(-(1.0 / n - 1.0)).epsilon(1e-13));
            CHECK(balpha.density(n, s) == doctest::Approx(0.5 * (1.0 / (n * n) - 1.0)).epsilon(1e-13));
            CHECK(constant.density(n, s) == doctest::Approx(-3.0 * (1.0 - n)).epsilon(1e-14));
        }
    }
}

TEST_CASE("potential closed-form examples")
{
    // B~ = -1/n^2, so A = -int_n^N B~ = 1/n - 1/N
    const auto inverse_square = disc_collar("1/((1-r)^2*r)");
    CHECK(inverse_square.potential(0.25, 0.3) == doctest::Approx(2.0).epsilon(1e-12));
    // B~ = -(1/n - 1), so A = ln(N/n) - (N - n) = -(ln(n/N) + N - n)
    const auto fig1 = disc_collar("1/(1-r)");
    CHECK(fig1.potential(0.25, 0.0) == doctest::Approx(-(std::log(0.5) + 0.25)).epsilon(1e-12));
    CHECK(std::abs(fig1.potential(0.25, 0.0)) == doctest::Approx(0.44315).epsilon(1e-5));
    const auto zero = disc_collar("0");
    CHECK(zero.potential(0.1, 1.0) == 0.0);
    CHECK(zero.potential_ds(0.1, 1.0) == 0.0);
}

TEST_CASE("tangential potential derivative")
{
    const auto radial = disc_collar("1/(1-r) + r^2");
    for (double s : {0.0, 1.0, 2.5})
        CHECK(radial.potential_ds(0.2, s) == doctest::Approx(0.0).epsilon(1e-12));

    // B = y/r^2 gives B~ = -sin s, so dA/ds = cos(s) (N - n)
    const auto separable = disc_collar("y/r^2");
    for (double s : {0.0, 0.7, 2.0, 5.5})
        CHECK(separable.potential_ds(0.1, s) == doctest::Approx(std::cos(s) * 0.4).epsilon(1e-9));

    const auto fig2a = disc_collar("1/(1-r) + 7*y + 5*x^2");
    const double h = 1e-5 * 2 * pi;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const double n = 0.5 * (0.001 + 0.99 * u(rng)), s = 2 * pi * u(rng);
        const double fd = (fig2a.potential(n, s + h) - fig2a.potential(n, s - h)) / (2 * h);
        CHECK(std::abs(fig2a.potential_ds(n, s) - fd) < 1e-6);
    }
}

TEST_CASE("gauge consistency: dA/dn equals the density")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const char* text : {"1/(1-r) + 7*y + 5*x^2", "1/(1-r) + 10*x - 2*x^2 - 10*y^3", "1/sqrt(1-r)"}) {
        const auto collar = disc_collar(text);
        const double h = 1e-6 * 0.5;
        for (int i = 0; i < 50; ++i) {
            const double n = 0.5 * (0.01 + 0.98 * u(rng)), s = 2 * pi * u(rng);
            const double fd = (collar.potential(n + h, s) - collar.potential(n - h, s)) / (2 * h);
            const double b = collar.density(n, s);
            CHECK(std::abs(fd - b) < 1e-7 * std::max(1.0, std::abs(b)));
        }
    }
}

TEST_CASE("automatic collar decompositions")
{
    const auto fig1 = disc_collar("1/(1-r)");
    REQUIRE(fig1.decomposition());
    const auto& d = *fig1.decomposition();
    CHECK(std::abs(d.M) == doctest::Approx(1.0));
    CHECK(d.alpha == doctest::Approx(1.0));
    CHECK(d.C_f == doctest::Approx(1.0));
    CHECK(d.bounded_blowup_form);
    // f = -M with the disc orientation
    CHECK(fig1.remainder(0.3, 1.0) == doctest::Approx(-d.M));

    const auto fig3 = disc_collar("1/sqrt(1-r)");
    REQUIRE(fig3.decomposition());
    CHECK_FALSE(fig3.decomposition()->bounded_blowup_form);

    const auto fig2b = disc_collar("1/(1-r) + 10*x - 2*x^2 - 10*y^3");
    REQUIRE(fig2b.decomposition());
    CHECK(fig2b.decomposition()->bounded_blowup_form);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto* c : {&fig1, &fig2b}) {
        const auto& dec = *c->decomposition();
        double worst = 0.0, worst_f = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double n = 0.5 * (1e-6 + (1 - 2e-6) * u(rng)), s = 2 * pi * u(rng);
            const double f = c->remainder(n, s);
            worst = std::max(worst, std::abs(c->density(n, s) - dec.M / std::pow(n, dec.alpha) - f));
            worst_f = std::max(worst_f, std::abs(f));
        }
        CHECK(worst < 1e-9);
        CHECK(worst_f <= dec.C_f * (1 + 1e-12));
    }
}

TEST_CASE("declared collar form for B_alpha")
{
    DeclaredCollar declared;
    declared.M = 0.5;
    declared.alpha = 2.0;
    declared.C_f = 0.5;
    const auto balpha = disc_collar("a*(r-2)/(r-1)^2", {{"a", 0.5}}, declared);
    REQUIRE(balpha.decomposition());
    const auto& d = *balpha.decomposition();
    CHECK(std::abs(d.M) == doctest::Approx(0.5));
    CHECK(d.alpha == 2.0);
    CHECK(d.bounded_blowup_form);
    for (double n : {1e-4, 0.1, 0.4})
        CHECK(balpha.remainder(n, 0.3) == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("blow-up checker: logarithmic divergence")
{
    const auto r = check_blowup_hypothesis(disc_collar("1/(1-r)"), 40, 1e3, 32, Execution::serial);
    CHECK(r.verdict == BlowupVerdict::divergent);
    REQUIRE(r.table.size() == 41);
    CHECK(std::abs(r.table.back().increment - std::log(2.0)) < 1e-6);
}

TEST_CASE("blow-up checker: integrable field and its limit")
{
    const auto r = check_blowup_hypothesis(disc_collar("1/sqrt(1-r)"), 40, 1e3, 32, Execution::serial);
    CHECK(r.verdict == BlowupVerdict::integrable);
    REQUIRE(r.limit);
    const double N = 0.5;
    CHECK(std::abs(*r.limit - (2 * std::sqrt(N) - 2.0 / 3.0 * std::pow(N, 1.5))) < 1e-8);
    CHECK(check_blowup_hypothesis(disc_collar("2"), 40, 1e3, 32, Execution::serial).verdict
          == BlowupVerdict::integrable);
}

TEST_CASE("blow-up checker: random power-law collars diverge")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> um(-5.0, 5.0), ua(1.0, 3.0);
    for (int i = 0; i < 8; ++i) {
        double M = um(rng);
        if (std::abs(M) < 1e-3)
            M = 1.0;
        const double a = ua(rng);
        const auto collar = disc_collar("M/((1-r)^a*r) + cos(3*x)*y", {{"M", M}, {"a", a}});
        CAPTURE(M);
        CAPTURE(a);
        CHECK(check_blowup_hypothesis(collar, 40, 1e3, 32, Execution::serial).verdict == BlowupVerdict::divergent);
    }
}

TEST_CASE("tangential checker")
{
    const auto radial = check_tangential_hypothesis(disc_collar("1/(1-r)"), 64, Execution::serial);
    CHECK(radial.estimate == doctest::Approx(0.0));
    CHECK_FALSE(radial.violated);
    const auto fig2a = check_tangential_hypothesis(disc_collar("1/(1-r) + 7*y + 5*x^2"), 64, Execution::serial);
    CHECK(std::isfinite(fig2a.estimate));
    CHECK(fig2a.estimate > 0.0);
    CHECK_FALSE(fig2a.violated);
    const auto counter = check_tangential_hypothesis(disc_collar("(2*(1-r) + y)/(1-r)^3"), 64, Execution::serial);
    CHECK(counter.violated);
}

TEST_CASE("tangential checker agrees with serial and parallel execution")
{
    const auto collar = disc_collar("1/(1-r) + 10*x - 2*x^2 - 10*y^3");
    const auto a = check_tangential_hypothesis(collar, 64, Execution::serial);
    const auto b = check_tangential_hypothesis(collar, 64, Execution::parallel);
    CHECK(a.estimate == b.estimate);
    CHECK(a.s_at_max == b.s_at_max);
}

TEST_CASE("inverse-square comparison")
{
    const auto balpha = inverse_square_comparison(disc_collar("a*(r-2)/(r-1)^2", {{"a", 0.5}}));
    CHECK_FALSE(balpha.meets);
    CHECK(balpha.min_value < 1.0);
    CHECK(inverse_square_comparison(disc_collar("2/(1-r)^2")).meets);
    const auto fig1 = inverse_square_comparison(disc_collar("1/(1-r)"));
    CHECK_FALSE(fig1.meets);
    CHECK(fig1.witness_n > 0.0);
}
