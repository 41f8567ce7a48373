#include "magconf/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>

#include "magconf/errors.hpp"

namespace magconf {

namespace {

using Vec4 = std::array<double, 4>;

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = -71.0 / 57600, e3 = 71.0 / 16695, e4 = -71.0 / 1920, e5 = 17253.0 / 339200,
                 e6 = -22.0 / 525, e7 = 1.0 / 40;

// Continuous extension: y(t + x h) = y + h sum_i k_i (P_i . [x, x^2, x^3, x^4]).
constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799},
    {0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632},
    {0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

Vec4 pack(const State& s) { return {s.q.x, s.q.y, s.v.x, s.v.y}; }

State unpack(double t, const Vec4& y) { return {t, {y[0], y[1]}, {y[2], y[3]}}; }

Vec4 combine(const Vec4& y, double h, std::initializer_list<std::pair<double, const Vec4*>> terms)
{
    Vec4 out = y;
    for (int i = 0; i < 4; ++i) {
        double acc = 0.0;
        for (const auto& [w, k] : terms)
            acc += w * (*k)[i];
        out[i] += h * acc;
    }
    return out;
}

class Stepper {
public:
    Stepper(const FieldSpec& field, const ParticleParams& params, const Domain& domain)
        : field_(field), ratio_(params.charge / params.mass), domain_(domain) {}

    // false when the point is outside the domain or B is not finite there
    bool eval(const Vec4& y, Vec4& dy) const
    {
        const Vec2 q{y[0], y[1]};
        if (!domain_.contains(q))
            return false;
        const double b = field_.value(q);
        if (!std::isfinite(b))
            return false;
        // dv/dt = -(e/m) B J v, J v = (-v_y, v_x)
        dy = {y[2], y[3], ratio_ * b * y[3], -ratio_ * b * y[2]};
        return true;
    }

private:
    const FieldSpec& field_;
    double ratio_;
    const Domain& domain_;
};

double error_norm(const Vec4& err, const Vec4& y0, const Vec4& y1, double rtol, double atol)
{
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        sum += (err[i] / sc) * (err[i] / sc);
    }
    return std::sqrt(sum / 4.0);
}

} // namespace

void validate(const ParticleParams& p)
{
    if (!(p.mass > 0.0) || !std::isfinite(p.mass))
        throw Error("particle mass must be positive");
    if (p.charge == 0.0 || !std::isfinite(p.charge))
        throw Error("particle charge must be nonzero");
}

StateRate rhs(const FieldSpec& field, const ParticleParams& params, const State& state)
{
    const double b = eval_cartesian(field, state.q);
    const double k = -params.charge / params.mass * b;
    return {state.v, k * rotate90(state.v)};
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::completed: return "completed";
    case Termination::hit_floor: return "hit_floor";
    case Termination::step_failure: return "step_failure";
    }
    return "completed";
}

Trajectory integrate(const FieldSpec& field, const ParticleParams& params, const Domain& domain, const State& initial,
                     double duration, const IntegratorOptions& options)
{
    validate(params);
    if (!(duration > 0.0))
        throw Error("integration time must be positive");
    if (!domain.contains(initial.q))
        throw Error("initial position outside the domain");

    Trajectory traj;
    traj.H0 = 0.5 * params.mass * dot(initial.v, initial.v);

    const Stepper stepper(field, params, domain);
    const double t0 = initial.t;
    const double t_end = t0 + duration;
    const double h_min = options.min_step_factor * duration;
    const double speed = norm(initial.v);

    Vec4 y = pack(initial);
    Vec4 k1{};
    if (!stepper.eval(y, k1)) {
        traj.status = Termination::step_failure;
        traj.message = "field not finite at the initial position";
        traj.samples.push_back({initial, std::nullopt});
        return traj;
    }
    traj.samples.push_back({initial, std::nullopt});

    double t = t0;
    double h = std::min(0.01 * duration, speed > 0.0 ? 0.01 / speed * std::max(1.0, norm(initial.q)) : duration);
    long next_output = 1;
    auto output_time = [&](long k) { return t0 + k * options.output_dt; };

    auto step_cap = [&](const Vec4& state) -> double {
        const auto [component, dist] = domain.nearest_boundary({state[0], state[1]});
        const double N = domain.components()[component].chart.width();
        if (dist < N && speed > 0.0)
            return options.c_step * dist / speed;
        return INFINITY;
    };

    while (t < t_end) {
        if (traj.steps + traj.rejected >= options.max_steps) {
            traj.status = Termination::step_failure;
            traj.message = "step budget exhausted";
            break;
        }
        h = std::min({h, t_end - t, step_cap(y)});
        if (h < h_min && t_end - t > h_min) {
            traj.status = Termination::step_failure;
            traj.message = "step size underflow at t = " + std::to_string(t);
            break;
        }

        Vec4 k2, k3, k4, k5, k6, k7;
        const Vec4 y2 = combine(y, h, {{a21, &k1}});
        bool ok = stepper.eval(y2, k2);
        Vec4 y3, y4, y5, y6, y_new;
        if (ok) {
            y3 = combine(y, h, {{a31, &k1}, {a32, &k2}});
            ok = stepper.eval(y3, k3);
        }
        if (ok) {
            y4 = combine(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
            ok = stepper.eval(y4, k4);
        }
        if (ok) {
            y5 = combine(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
            ok = stepper.eval(y5, k5);
        }
        if (ok) {
            y6 = combine(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
            ok = stepper.eval(y6, k6);
        }
        if (ok) {
            y_new = combine(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
            ok = stepper.eval(y_new, k7);
        }
        if (!ok) {
            ++traj.rejected;
            h *= 0.25;
            continue;
        }

        Vec4 err{};
        for (int i = 0; i < 4; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double en = error_norm(err, y, y_new, options.rel_tol, options.abs_tol);
        if (!(en <= 1.0)) {
            ++traj.rejected;
            h *= std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.25;
            continue;
        }

        // dense output for cadence samples inside (t, t + h)
        const double t_new = (t_end - t - h <= 1e-15 * duration) ? t_end : t + h;
        if (options.output_dt > 0.0) {
            const std::array<const Vec4*, 7> ks{&k1, &k2, &k3, &k4, &k5, &k6, &k7};
            while (output_time(next_output) < t_new - 1e-12 * options.output_dt) {
                const double x = (output_time(next_output) - t) / h;
                const double powers[4] = {x, x * x, x * x * x, x * x * x * x};
                Vec4 yo = y;
                for (int i = 0; i < 4; ++i) {
                    double acc = 0.0;
                    for (int s = 0; s < 7; ++s) {
                        double q = 0.0;
                        for (int p = 0; p < 4; ++p)
                            q += P[s][p] * powers[p];
                        acc += (*ks[s])[i] * q;
                    }
                    yo[i] += h * acc;
                }
                traj.samples.push_back({unpack(output_time(next_output), yo), std::nullopt});
                ++next_output;
            }
        }

        t = t_new;
        y = y_new;
        k1 = k7;
        ++traj.steps;
        h *= std::min(10.0, en > 0.0 ? 0.9 * std::pow(en, -0.2) : 10.0);

        const auto [component, dist] = domain.nearest_boundary({y[0], y[1]});
        const double floor = options.n_floor_factor * domain.components()[component].chart.width();
        const bool at_floor = dist < floor;
        const bool on_cadence = options.output_dt > 0.0
                                && std::abs(output_time(next_output) - t) <= 1e-12 * options.output_dt;
        if (on_cadence)
            ++next_output;
        if (options.record_steps || at_floor || on_cadence || t == t_end)
            traj.samples.push_back({unpack(on_cadence ? output_time(next_output - 1) : t, y), std::nullopt});
        if (at_floor) {
            traj.status = Termination::hit_floor;
            traj.message = "boundary distance " + std::to_string(dist) + " below floor at t = " + std::to_string(t);
            break;
        }
    }
    return traj;
}

std::optional<Canonical> to_canonical(const CollarField& collar, const ParticleParams& params, const State& state)
{
    const CollarChart& chart = collar.chart();
    const auto nc = chart.to_normal(state.q);
    if (!nc)
        return std::nullopt;
    const BoundaryCurve& curve = chart.curve();
    const double metric = 1.0 - curve.curvature(nc->s) * nc->n;
    const double n_dot = dot(state.v, curve.normal(nc->s));
    const double s_dot = dot(state.v, curve.tangent(nc->s)) / metric;
    Canonical c;
    c.n = nc->n;
    c.s = nc->s;
    c.p_n = params.mass * n_dot;
    c.p_s = params.mass * metric * metric * s_dot + params.charge * collar.potential(nc->n, nc->s);
    return c;
}

double hamiltonian(const CollarField& collar, const ParticleParams& params, const Canonical& c)
{
    const double metric = 1.0 - collar.chart().curve().curvature(c.s) * c.n;
    const double kinetic_s = c.p_s - params.charge * collar.potential(c.n, c.s);
    return c.p_n * c.p_n / (2.0 * params.mass) + kinetic_s * kinetic_s / (2.0 * params.mass * metric * metric);
}

double ps_rate(const CollarField& collar, const ParticleParams& params, const Canonical& c)
{
    const BoundaryCurve& curve = collar.chart().curve();
    if (!(c.n > 0.0 && c.n < collar.chart().width()))
        throw ChartError("normal coordinate n outside (0, N)");
    const double m = params.mass, e = params.charge;
    const double metric = 1.0 - curve.curvature(c.s) * c.n;
    const double w = c.p_s - e * collar.potential(c.n, c.s);
    const double first = w / (m * metric * metric) * e * collar.potential_ds(c.n, c.s);
    const double second = w * w / (m * metric * metric * metric) * curve.curvature_derivative(c.s) * c.n;
    return first - second;
}

void diagnostics_pass(Trajectory& trajectory, const Domain& domain, std::span<const CollarField> collars,
                      const ParticleParams& params)
{
    if (collars.size() != domain.components().size())
        throw Error("one collar field per boundary component is required");
    trajectory.min_n = INFINITY;
    trajectory.max_abs_A = 0.0;
    trajectory.max_energy_drift = 0.0;
    trajectory.max_speed_drift = 0.0;
    if (trajectory.samples.empty())
        return;
    const double v0 = norm(trajectory.samples.front().state.v);
    for (Sample& sample : trajectory.samples) {
        const State& st = sample.state;
        trajectory.min_n = std::min(trajectory.min_n, domain.boundary_distance(st.q));
        if (v0 > 0.0)
            trajectory.max_speed_drift = std::max(trajectory.max_speed_drift, std::abs(norm(st.v) - v0) / v0);
        sample.diagnostics.reset();
        const auto loc = domain.locate(st.q);
        if (!loc)
            continue;
        const CollarField& collar = collars[loc->component];
        const auto c = to_canonical(collar, params, st);
        if (!c)
            continue;
        Diagnostics d;
        d.component = loc->component;
        d.canonical = *c;
        d.A = collar.potential(c->n, c->s);
        d.H = hamiltonian(collar, params, *c);
        sample.diagnostics = d;
        trajectory.max_abs_A = std::max(trajectory.max_abs_A, std::abs(d.A));
        if (trajectory.H0 > 0.0)
            trajectory.max_energy_drift
                = std::max(trajectory.max_energy_drift, std::abs(d.H - trajectory.H0) / trajectory.H0);
    }
}

std::vector<Trajectory> run_ensemble(const FieldSpec& field, const ParticleParams& params, const Domain& domain,
                                     std::span<const CollarField> collars, std::span<const State> initial,
                                     double duration, const IntegratorOptions& options, Execution exec)
{
    std::vector<Trajectory> out(initial.size());
    std::vector<std::exception_ptr> errors(initial.size());
    const long count = static_cast<long>(initial.size());
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
    for (long i = 0; i < count; ++i) {
        try {
            Trajectory t = integrate(field, params, domain, initial[i], duration, options);
            diagnostics_pass(t, domain, collars, params);
            out[i] = std::move(t);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace magconf
