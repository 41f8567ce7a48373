#pragma once

#include <functional>

namespace magconf {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    double magnitude = 0.0;  //!< estimate of the integral of |f|
    int intervals = 0;
    bool converged = false;
};

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-300;
    int max_intervals = 10000;
};

//! Single 21-point Gauss-Kronrod panel on [a, b]; error is |K21 - G10|.
QuadratureResult gauss_kronrod21(const std::function<double(double)>& f, double a, double b);

/*!
 * Globally adaptive Gauss-Kronrod: repeatedly bisects the panel with the
 * largest error estimate until the total error is below
 * max(abs_tol, rel_tol * |I|) or max_intervals panels are in use.
 */
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options = {});

//! As `integrate` but throws QuadratureError when the tolerance is not met.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& options = {});

/*!
 * Integral over [a, b], 0 < a < b, after substituting m = exp(u). Suited to
 * integrands that blow up like a power of 1/m near 0.
 */
QuadratureResult integrate_log(const std::function<double(double)>& f, double a, double b,
                               const QuadratureOptions& options = {});

} // namespace magconf
