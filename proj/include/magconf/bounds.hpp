#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "magconf/dynamics.hpp"
#include "magconf/field.hpp"

namespace magconf {

//! Raw inputs of the confinement constants for one collar and one trajectory segment.
struct ConfinementInputs {
    double K = 0.0;
    double K_prime = 0.0;
    double N = 0.0;
    double epsilon = 0.5;
    double D_C = 0.0;
    double C_f = 0.0;
    double M = 0.0;
    double alpha = 1.0;
    double H0 = 0.0;
    double charge = 1.0;
    double mass = 1.0;
    double p_s0 = 0.0;
};

struct PotentialConstants {
    double C0 = 0.0;
    double C1 = 0.0;
};

struct ConfinementConstants {
    ConfinementInputs inputs;
    double C0 = 0.0;
    double C1 = 0.0;
    double D0 = 0.0;               //!< uses C_f / |M|
    double D0_conservative = 0.0;  //!< uses C_f N / |M|
    double D1 = 0.0;
};

/*!
 * |A(q(t))| <= C0 + C1 |t| along a trajectory that stays in the collar:
 *   C0 = (|p_s(0)| + sqrt(2 m H0)(1 + eps)) / e
 *   C1 = sqrt(2 H0 / m) D_C / (1 - eps) + 2 H0 K' N / (e (1 - eps))
 * The charge enters through |e|. Throws Error for eps outside (0, 1), H0 < 0 or e = 0.
 */
PotentialConstants potential_constants(const ConfinementInputs& in);

//! All constants; D0, D1 divide the potential constants by |M| (M != 0, alpha >= 1 required).
ConfinementConstants confinement_constants(const ConfinementInputs& in);

/*!
 * Lower bound on n(t) for t <= T given d(T):
 *   (N^-(alpha-1) + (alpha-1) d)^(-1/(alpha-1))  for alpha > 1
 *   N exp(-d)                                    for alpha = 1
 */
double distance_lower_bound(double N, double alpha, double d);

//! Bound at time T using D0 (or the conservative D0) + D1 T.
double distance_lower_bound(const ConfinementConstants& c, double T, bool conservative = false);

//! One stretch of consecutive samples inside the same collar.
struct BoundSegment {
    std::size_t component = 0;
    std::size_t first_sample = 0;
    std::size_t last_sample = 0;
    double entry_time = 0.0;
    ConfinementConstants constants;
};

struct BoundReport {
    std::string kind;
    bool pass = true;
    bool vacuous = false;
    std::string note;
    double tol_margin = 1e-6;
    double worst_margin = INFINITY;  //!< relative margin, >= -tol_margin to pass
    double worst_time = 0.0;
    std::size_t checked = 0;
    std::vector<BoundSegment> segments;
    // distance bound only: the other D0 variant, reported alongside
    double worst_margin_alternative = INFINITY;
    bool used_conservative = false;
};

//! Per-collar data the verifiers need: the field on the collar and the D_C to use.
struct CollarBoundData {
    const CollarField* collar = nullptr;
    double D_C = 0.0;
};

/*!
 * Resolves D_C for a collar: the declared value when present, otherwise the
 * estimate from check_tangential_hypothesis.
 */
CollarBoundData bound_data(const CollarField& collar, Execution exec = Execution::parallel);

BoundReport verify_potential_bound(const Trajectory& trajectory, std::span<const CollarBoundData> collars,
                                   const ParticleParams& params, double tol_margin = 1e-6);

//! Requires a collar decomposition on every visited collar; throws Error otherwise.
BoundReport verify_distance_bound(const Trajectory& trajectory, std::span<const CollarBoundData> collars,
                                  const ParticleParams& params, double tol_margin = 1e-6);

struct HypothesisReport {
    BlowupReport blowup;
    TangentialReport tangential;
    ComparisonReport comparison;
    bool conditions_met = false;  //!< divergent normal integral and integrable s-derivative
    bool comparison_meets = false;    //!< |B| >= 1/n^2 on the sampled grid
};

HypothesisReport hypothesis_report(const CollarField& collar, Execution exec = Execution::parallel);

/*!
 * Distance bounds computed as if the collar field had the blow-up form with
 * exponent `alpha` (|M| and C_f from the decomposition when present, else 1
 * and 0). Used as a negative control for fields violating the hypotheses.
 */
double surrogate_distance_bound(const CollarBoundData& data, const ParticleParams& params, double H0, double p_s0,
                                double alpha, double T);

} // namespace magconf
