#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "magconf/field.hpp"
#include "magconf/geometry.hpp"
#include "magconf/parallel.hpp"

namespace magconf {

struct ParticleParams {
    double mass = 1.0;
    double charge = 1.0;
};

//! Throws Error unless mass > 0 and charge != 0.
void validate(const ParticleParams& p);

struct State {
    double t = 0.0;
    Vec2 q;
    Vec2 v;
};

struct StateRate {
    Vec2 dq;
    Vec2 dv;
};

//! m q'' = -e B(q) J q'. Throws FieldSingular if B(q) is not finite.
StateRate rhs(const FieldSpec& field, const ParticleParams& params, const State& state);

struct IntegratorOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double output_dt = 0.0;        //!< sample cadence; 0 keeps only the endpoints
    bool record_steps = false;     //!< also keep every accepted step
    double c_step = 0.1;           //!< h <= c_step n / |v| inside a collar
    double n_floor_factor = 1e-6;  //!< stop when n < n_floor_factor * N
    double min_step_factor = 1e-14;
    long max_steps = 100'000'000;
};

enum class Termination { completed, hit_floor, step_failure };

std::string to_string(Termination t);

//! Normal-coordinate phase-space point.
struct Canonical {
    double n = 0.0;
    double s = 0.0;
    double p_n = 0.0;
    double p_s = 0.0;
};

struct Diagnostics {
    std::size_t component = 0;
    Canonical canonical;
    double A = 0.0;
    double H = 0.0;
};

struct Sample {
    State state;
    std::optional<Diagnostics> diagnostics;  //!< empty outside every collar
};

struct Trajectory {
    std::vector<Sample> samples;
    Termination status = Termination::completed;
    std::string message;
    double H0 = 0.0;
    long steps = 0;
    long rejected = 0;

    // filled by diagnostics_pass
    double min_n = INFINITY;  //!< smallest boundary distance over all samples
    double max_abs_A = 0.0;
    double max_energy_drift = 0.0;  //!< relative, Hamiltonian in collar coordinates
    double max_speed_drift = 0.0;   //!< relative, all samples
};

/*!
 * Adaptive Dormand-Prince 5(4) integration of the planar Lorentz equations
 * in cartesian coordinates, with dense output for the sample cadence. Stage
 * points outside the domain cause the step to be rejected.
 */
Trajectory integrate(const FieldSpec& field, const ParticleParams& params, const Domain& domain, const State& initial,
                     double duration, const IntegratorOptions& options = {});

//! (n, s, p_n, p_s) with p_s = m (1 - kappa n)^2 s' + e A; nullopt outside the collar.
std::optional<Canonical> to_canonical(const CollarField& collar, const ParticleParams& params, const State& state);

//! Hamiltonian in normal coordinates.
double hamiltonian(const CollarField& collar, const ParticleParams& params, const Canonical& c);

//! dp_s/dt = -dH/ds.
double ps_rate(const CollarField& collar, const ParticleParams& params, const Canonical& c);

//! Fills per-sample diagnostics and the trajectory summaries; collars[i] belongs to domain component i.
void diagnostics_pass(Trajectory& trajectory, const Domain& domain, std::span<const CollarField> collars,
                      const ParticleParams& params);

/*!
 * Integrates every initial state and fills diagnostics. The parallel kernel
 * distributes particles over OpenMP threads; results are stored by particle
 * index, so both executions return identical trajectories.
 */
std::vector<Trajectory> run_ensemble(const FieldSpec& field, const ParticleParams& params, const Domain& domain,
                                     std::span<const CollarField> collars, std::span<const State> initial,
                                     double duration, const IntegratorOptions& options,
                                     Execution exec = Execution::parallel);

} // namespace magconf
