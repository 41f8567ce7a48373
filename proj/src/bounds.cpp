#include "magconf/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "magconf/errors.hpp"

namespace magconf {

PotentialConstants potential_constants(const ConfinementInputs& in)
{
    if (!(in.epsilon > 0.0 && in.epsilon < 1.0))
        throw Error("epsilon must lie in (0, 1)");
    if (!(in.H0 >= 0.0))
        throw Error("energy must be nonnegative");
    if (in.charge == 0.0)
        throw Error("charge must be nonzero");
    if (!(in.mass > 0.0))
        throw Error("mass must be positive");
    const double e = std::abs(in.charge);
    PotentialConstants c;
    c.C0 = (std::abs(in.p_s0) + std::sqrt(2.0 * in.mass * in.H0) * (1.0 + in.epsilon)) / e;
    c.C1 = std::sqrt(2.0 * in.H0 / in.mass) * in.D_C / (1.0 - in.epsilon)
           + 2.0 * in.H0 * in.K_prime * in.N / (e * (1.0 - in.epsilon));
    return c;
}

ConfinementConstants confinement_constants(const ConfinementInputs& in)
{
    if (in.M == 0.0)
        throw Error("blow-up coefficient M must be nonzero");
    if (!(in.alpha >= 1.0))
        throw Error("blow-up exponent must be >= 1");
    const auto p = potential_constants(in);
    const double M = std::abs(in.M);
    ConfinementConstants c;
    c.inputs = in;
    c.C0 = p.C0;
    c.C1 = p.C1;
    c.D0 = in.C_f / M + p.C0 / M;
    c.D0_conservative = in.C_f * in.N / M + p.C0 / M;
    c.D1 = p.C1 / M;
    return c;
}

double distance_lower_bound(double N, double alpha, double d)
{
    if (!(alpha >= 1.0))
        throw Error("blow-up exponent must be >= 1");
    if (alpha == 1.0)
        return N * std::exp(-d);
    const double a = alpha - 1.0;
    return std::pow(std::pow(N, -a) + a * d, -1.0 / a);
}

double distance_lower_bound(const ConfinementConstants& c, double T, bool conservative)
{
    if (!(T >= 0.0))
        throw Error("time must be nonnegative");
    const double d = (conservative ? c.D0_conservative : c.D0) + c.D1 * T;
    return distance_lower_bound(c.inputs.N, c.inputs.alpha, d);
}

CollarBoundData bound_data(const CollarField& collar, Execution exec)
{
    CollarBoundData data;
    data.collar = &collar;
    if (collar.declared().D_C)
        data.D_C = *collar.declared().D_C;
    else
        data.D_C = check_tangential_hypothesis(collar, 64, exec).estimate;
    return data;
}

namespace {

std::vector<BoundSegment> split_segments(const Trajectory& traj)
{
    std::vector<BoundSegment> segments;
    const auto& samples = traj.samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& d = samples[i].diagnostics;
        if (!d)
            continue;
        const bool continues = !segments.empty() && segments.back().last_sample + 1 == i
                               && segments.back().component == d->component;
        if (continues) {
            segments.back().last_sample = i;
        } else {
            BoundSegment s;
            s.component = d->component;
            s.first_sample = s.last_sample = i;
            s.entry_time = samples[i].state.t;
            segments.push_back(s);
        }
    }
    return segments;
}

ConfinementInputs inputs_for(const CollarBoundData& data, const ParticleParams& params, double H0, double p_s0)
{
    const CollarChart& chart = data.collar->chart();
    ConfinementInputs in;
    in.K = chart.bounds().K;
    in.K_prime = chart.bounds().K_prime;
    in.N = chart.width();
    in.epsilon = chart.epsilon();
    in.D_C = data.D_C;
    in.H0 = H0;
    in.charge = params.charge;
    in.mass = params.mass;
    in.p_s0 = p_s0;
    if (const auto& d = data.collar->decomposition()) {
        in.M = d->M;
        in.alpha = d->alpha;
        in.C_f = d->C_f;
    }
    return in;
}

} // namespace

BoundReport verify_potential_bound(const Trajectory& trajectory, std::span<const CollarBoundData> collars,
                                   const ParticleParams& params, double tol_margin)
{
    BoundReport report;
    report.kind = "potential";
    report.tol_margin = tol_margin;
    report.segments = split_segments(trajectory);
    if (report.segments.empty()) {
        report.vacuous = true;
        report.note = "trajectory never enters a collar";
        return report;
    }
    for (BoundSegment& seg : report.segments) {
        const auto& entry = *trajectory.samples[seg.first_sample].diagnostics;
        const ConfinementInputs in = inputs_for(collars[seg.component], params, trajectory.H0, entry.canonical.p_s);
        const auto p = potential_constants(in);
        seg.constants.inputs = in;
        seg.constants.C0 = p.C0;
        seg.constants.C1 = p.C1;
        for (std::size_t i = seg.first_sample; i <= seg.last_sample; ++i) {
            const Sample& s = trajectory.samples[i];
            const double bound = p.C0 + p.C1 * (s.state.t - seg.entry_time);
            const double margin = (bound - std::abs(s.diagnostics->A)) / std::max(bound, 1e-300);
            ++report.checked;
            if (margin < report.worst_margin) {
                report.worst_margin = margin;
                report.worst_time = s.state.t;
            }
        }
    }
    report.pass = report.worst_margin >= -tol_margin;
    if (report.segments.size() > 1)
        report.note = "constants restarted at each collar entry";
    return report;
}

BoundReport verify_distance_bound(const Trajectory& trajectory, std::span<const CollarBoundData> collars,
                                  const ParticleParams& params, double tol_margin)
{
    BoundReport report;
    report.kind = "distance";
    report.tol_margin = tol_margin;
    report.segments = split_segments(trajectory);
    if (report.segments.empty()) {
        report.vacuous = true;
        report.note = "trajectory never enters a collar";
        return report;
    }
    for (BoundSegment& seg : report.segments) {
        const CollarBoundData& data = collars[seg.component];
        const auto& decomposition = data.collar->decomposition();
        if (!decomposition)
            throw Error("distance bound needs a collar decomposition (declare M, alpha or use a template field)");
        if (!decomposition->bounded_blowup_form)
            throw Error("collar decomposition is not of the bounded blow-up form: " + decomposition->note);
        const auto& entry = *trajectory.samples[seg.first_sample].diagnostics;
        seg.constants = confinement_constants(inputs_for(data, params, trajectory.H0, entry.canonical.p_s));
        const bool conservative = seg.constants.inputs.N > 1.0;
        report.used_conservative = report.used_conservative || conservative;
        for (std::size_t i = seg.first_sample; i <= seg.last_sample; ++i) {
            const Sample& s = trajectory.samples[i];
            const double tau = s.state.t - seg.entry_time;
            const double n = s.diagnostics->canonical.n;
            const double used = distance_lower_bound(seg.constants, tau, conservative);
            const double other = distance_lower_bound(seg.constants, tau, !conservative);
            const double margin = (n - used) / used;
            ++report.checked;
            if (margin < report.worst_margin) {
                report.worst_margin = margin;
                report.worst_time = s.state.t;
            }
            report.worst_margin_alternative = std::min(report.worst_margin_alternative, (n - other) / other);
        }
    }
    report.pass = report.worst_margin >= -tol_margin;
    report.note = report.used_conservative ? "conservative D0 (C_f N / |M|) used since N > 1"
                                           : "D0 with C_f / |M|";
    return report;
}

HypothesisReport hypothesis_report(const CollarField& collar, Execution exec)
{
    HypothesisReport r;
    r.blowup = check_blowup_hypothesis(collar, 40, 1e3, 32, exec);
    r.tangential = check_tangential_hypothesis(collar, 64, exec);
    r.comparison = inverse_square_comparison(collar);
    r.conditions_met = r.blowup.verdict == BlowupVerdict::divergent && !r.tangential.violated;
    r.comparison_meets = r.comparison.meets;
    return r;
}

double surrogate_distance_bound(const CollarBoundData& data, const ParticleParams& params, double H0, double p_s0,
                                double alpha, double T)
{
    ConfinementInputs in = inputs_for(data, params, H0, p_s0);
    if (!data.collar->decomposition() || in.M == 0.0) {
        in.M = 1.0;
        in.C_f = 0.0;
    }
    in.alpha = alpha;
    const auto c = confinement_constants(in);
    return distance_lower_bound(c, T, in.N > 1.0);
}

} // namespace magconf
