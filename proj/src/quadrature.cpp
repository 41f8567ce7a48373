#include "magconf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "magconf/errors.hpp"

namespace magconf {

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr double xgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr double wgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double wg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
    double a, b, value, error, magnitude;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// Relative to |I|, falling back to roundoff in the integral of |f| when I cancels.
double tolerance(const QuadratureOptions& o, double value, double magnitude)
{
    return std::max({o.abs_tol, o.rel_tol * std::abs(value), 100.0 * 2.220446049250313e-16 * magnitude});
}

} // namespace

QuadratureResult gauss_kronrod21(const std::function<double(double)>& f, double a, double b)
{
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double resk = wgk[10] * fc;
    double resg = 0.0;
    double resabs = wgk[10] * std::abs(fc);
    for (int j = 0; j < 10; ++j) {
        const double dx = half * xgk[j];
        const double f1 = f(centre - dx);
        const double f2 = f(centre + dx);
        resk += wgk[j] * (f1 + f2);
        resabs += wgk[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1)
            resg += wg[j / 2] * (f1 + f2);
    }
    QuadratureResult r;
    r.value = resk * half;
    r.error = std::abs((resk - resg) * half);
    r.magnitude = std::abs(resabs * half);
    r.intervals = 1;
    r.converged = std::isfinite(r.value);
    return r;
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options)
{
    if (a == b)
        return {0.0, 0.0, 0.0, 0, true};

    std::priority_queue<Panel> panels;
    auto first = gauss_kronrod21(f, a, b);
    panels.push({a, b, first.value, first.error, first.magnitude});
    double total = first.value;
    double error = first.error;
    double magnitude = first.magnitude;

    auto done = [&] { return error <= tolerance(options, total, magnitude); };
    while (!done() && static_cast<int>(panels.size()) < options.max_intervals) {
        if (!std::isfinite(total))
            break;
        Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            panels.push(worst);  // cannot split further
            break;
        }
        auto left = gauss_kronrod21(f, worst.a, mid);
        auto right = gauss_kronrod21(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        magnitude += left.magnitude + right.magnitude - worst.magnitude;
        panels.push({worst.a, mid, left.value, left.error, left.magnitude});
        panels.push({mid, worst.b, right.value, right.error, right.magnitude});
    }

    // resum to shed accumulated cancellation in the running totals
    QuadratureResult r;
    r.intervals = static_cast<int>(panels.size());
    while (!panels.empty()) {
        r.value += panels.top().value;
        r.error += panels.top().error;
        r.magnitude += panels.top().magnitude;
        panels.pop();
    }
    r.converged = std::isfinite(r.value) && r.error <= tolerance(options, r.value, r.magnitude);
    return r;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& options)
{
    auto r = integrate(f, a, b, options);
    if (!r.converged)
        throw QuadratureError("quadrature did not converge", r.error);
    return r.value;
}

QuadratureResult integrate_log(const std::function<double(double)>& f, double a, double b,
                               const QuadratureOptions& options)
{
    if (!(a > 0.0 && b > 0.0))
        throw QuadratureError("log-substituted quadrature needs positive limits", INFINITY);
    return integrate([&f](double u) {
        const double m = std::exp(u);
        return f(m) * m;
    }, std::log(a), std::log(b), options);
}

} // namespace magconf
