#include <algorithm>
#include <cmath>
#include <string>

#include "magconf/errors.hpp"
#include "magconf/field.hpp"

namespace magconf {

namespace {

constexpr int tail_window = 6;

} // namespace

BlowupReport check_blowup_hypothesis(const CollarField& field, int decades, double growth_threshold, int s_samples,
                                     Execution exec)
{
    BlowupReport report;
    const double N = field.chart().width();
    const double L = field.chart().curve().length();
    decades = std::max(decades, 2);
    s_samples = std::max(s_samples, 1);

    // columns[j][k] = int_{n_k}^N B~(m, s_j) dm, accumulated one halving at a time
    std::vector<std::vector<double>> columns(s_samples, std::vector<double>(decades + 1, 0.0));
    std::vector<int> failed(s_samples, 0);
    std::vector<std::string> messages(s_samples);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
    for (int j = 0; j < s_samples; ++j) {
        const double s = L * j / s_samples;
        try {
            for (int k = 1; k <= decades; ++k) {
                const double hi = N * std::ldexp(1.0, -(k - 1));
                const double lo = N * std::ldexp(1.0, -k);
                columns[j][k] = columns[j][k - 1] + field.flux(lo, hi, s);
            }
        } catch (const Error& e) {
            failed[j] = 1;
            messages[j] = e.what();
        }
    }
    if (auto it = std::find(failed.begin(), failed.end(), 1); it != failed.end()) {
        const auto j = it - failed.begin();
        report.reason = "quadrature failed on the ray s = " + std::to_string(L * j / s_samples) + ": " + messages[j];
        return report;
    }

    for (int k = 0; k <= decades; ++k) {
        BlowupRow row;
        row.k = k;
        row.n = N * std::ldexp(1.0, -k);
        row.min_integral = INFINITY;
        for (int j = 0; j < s_samples; ++j)
            row.min_integral = std::min(row.min_integral, std::abs(columns[j][k]));
        row.increment = k == 0 ? 0.0 : row.min_integral - report.table.back().min_integral;
        report.table.push_back(row);
    }

    const auto& t = report.table;
    const int K = decades;
    const int first = std::max(2, K - tail_window + 1);
    bool finite = true, growing = true, non_decaying = true, decaying = true;
    for (int k = first; k <= K; ++k) {
        const double d = t[k].increment, prev = t[k - 1].increment;
        finite = finite && std::isfinite(t[k].min_integral);
        growing = growing && d > 0.0;
        non_decaying = non_decaying && prev > 0.0 && d >= 0.98 * prev;
        decaying = decaying && prev != 0.0 && std::abs(d) <= 0.9 * std::abs(prev);
    }
    const double last = t[K].increment;
    if (!finite) {
        report.reason = "non-finite integral";
        return report;
    }
    if (growing && (t[K].min_integral >= growth_threshold || non_decaying)) {
        report.verdict = BlowupVerdict::divergent;
        report.reason = t[K].min_integral >= growth_threshold ? "integral exceeds growth threshold"
                                                              : "per-halving increments do not decay";
        return report;
    }
    if (std::abs(last) < 1e-8 || decaying) {
        report.verdict = BlowupVerdict::integrable;
        // geometric tail from the last two increments
        const double prev = t[K - 1].increment;
        const double rho = prev != 0.0 ? last / prev : 0.0;
        double tail = 0.0;
        if (rho > -1.0 && rho < 1.0)
            tail = last * rho / (1.0 - rho);
        report.limit = t[K].min_integral + tail;
        report.reason = std::abs(last) < 1e-8 ? "increments below 1e-8" : "increments decay geometrically";
        return report;
    }
    report.reason = "increments neither settle nor grow steadily";
    return report;
}

TangentialReport check_tangential_hypothesis(const CollarField& field, int s_samples, Execution exec)
{
    const double N = field.chart().width();
    const double L = field.chart().curve().length();
    // dyadic panels down to N 2^-34 < 1e-10 N
    constexpr int halvings = 34;
    s_samples = std::max(s_samples, 1);
    const QuadratureOptions quad = field.quadrature();

    struct Ray {
        double total = 0.0;
        bool growing = false;
        bool failed = false;
    };
    std::vector<Ray> rays(s_samples);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
    for (int j = 0; j < s_samples; ++j) {
        const double s = L * j / s_samples;
        auto integrand = [&](double m) { return std::abs(field.density_ds(m, s)); };
        Ray ray;
        double last = 0.0, prev = 0.0;
        try {
            for (int k = 0; k < halvings; ++k) {
                const double hi = N * std::ldexp(1.0, -k);
                const double lo = 0.5 * hi;
                auto r = integrate(integrand, lo, hi, quad);
                if (!std::isfinite(r.value))
                    throw QuadratureError("non-finite tangential integrand", r.error);
                prev = last;
                last = r.value;
                ray.total += r.value;
            }
        } catch (const Error&) {
            ray.failed = true;
        }
        // per-halving rate of the last two panels
        if (last > 0.0 && prev > 0.0) {
            const double rho = last / prev;
            if (rho >= 0.95)
                ray.growing = true;
            else
                ray.total += last * rho / (1.0 - rho);
        }
        rays[j] = ray;
    }

    TangentialReport report;
    for (int j = 0; j < s_samples; ++j) {
        const Ray& ray = rays[j];
        if (ray.failed || ray.growing)
            report.still_growing = true;
        if (ray.failed || ray.total > report.estimate) {
            report.estimate = ray.failed ? INFINITY : std::max(report.estimate, ray.total);
            report.s_at_max = L * j / s_samples;
        }
    }
    report.violated = report.still_growing || !std::isfinite(report.estimate);
    return report;
}

ComparisonReport inverse_square_comparison(const CollarField& field, int n_samples, int s_samples)
{
    const double N = field.chart().width();
    const double L = field.chart().curve().length();
    ComparisonReport report;
    report.min_value = INFINITY;
    for (int j = 0; j < s_samples; ++j) {
        const double s = L * j / s_samples;
        for (int i = 0; i < n_samples; ++i) {
            const double n = N * (i + 0.5) / n_samples;
            const Vec2 q = field.chart().map(n, s);
            const double v = std::abs(field.field().value(q)) * n * n;
            if (v < report.min_value) {
                report.min_value = v;
                report.witness = q;
                report.witness_n = n;
                report.witness_s = s;
            }
        }
    }
    report.meets = report.min_value >= 1.0 - 1e-12;
    return report;
}

} // namespace magconf
