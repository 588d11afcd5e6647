#include "bathsim/dynamics.hpp"
#include "bathsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace bathsim {

SystemState make_state(double x0, double p0, const BathInitialData& data)
{
    SystemState s;
    s.x = x0;
    s.p = p0;
    s.eta = data.eta0;
    s.pi = data.etadot0;
    return s;
}

EnergyBreakdown total_energy(const SystemState& state, const DiscreteBath& bath,
                             const OscillatorModel& osc)
{
    if (state.eta.size() != bath.size() || state.pi.size() != bath.size())
        throw InvalidArgument("total_energy: state size does not match bath size");

    EnergyBreakdown e;
    e.kinetic_x = 0.5 * state.p * state.p;

    double kin_bath = 0.0, pot_bath = 0.0, coupling = 0.0, square = 0.0;
    const double fx = osc.f(state.x);
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double w = bath.weights[j];
        const double nu = bath.nodes[j];
        const double a = bath.couplings[j];
        kin_bath += w * state.pi[j] * state.pi[j];
        pot_bath += w * nu * nu * state.eta[j] * state.eta[j];
        coupling += w * a * state.eta[j];
        const double shifted = state.eta[j] - a * fx / (nu * nu);
        square += w * nu * nu * shifted * shifted;
    }
    e.kinetic_bath = 0.5 * kin_bath;
    e.bath_energy = kin_bath + pot_bath;
    e.coupling_sum = coupling;
    e.total = e.kinetic_x + osc.V0(state.x) + 0.5 * (kin_bath + pot_bath) - fx * coupling;
    e.effective_potential = osc.V0(state.x) -
                            0.5 * discrete_dissipation_constant(bath) * fx * fx;
    e.completed_square = 0.5 * square;
    return e;
}

namespace {

// Precomputed per-step data for the splitting propagator.
struct Stepper {
    const DiscreteBath& bath;
    const OscillatorModel& osc;
    Polynomial V0p;
    Polynomial fp;
    double dt;
    std::vector<double> cos_, sin_over_nu_, nu_sin_;
    std::vector<double> wa_;  // w_j a_j

    Stepper(const DiscreteBath& b, const OscillatorModel& o, double step)
        : bath(b), osc(o), V0p(o.V0.derivative()), fp(o.f.derivative()), dt(step)
    {
        const std::size_t n = b.size();
        cos_.resize(n);
        sin_over_nu_.resize(n);
        nu_sin_.resize(n);
        wa_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double nu = b.nodes[j];
            const double c = std::cos(nu * dt);
            const double s = std::sin(nu * dt);
            cos_[j] = c;
            sin_over_nu_[j] = s / nu;
            nu_sin_[j] = nu * s;
            wa_[j] = b.weights[j] * b.couplings[j];
        }
    }

    void kick(SystemState& st, double h) const
    {
        double coupling = 0.0;
        const std::size_t n = bath.size();
        for (std::size_t j = 0; j < n; ++j) coupling += wa_[j] * st.eta[j];
        st.p += h * (-V0p(st.x) + fp(st.x) * coupling);
        const double fx = osc.f(st.x);
        for (std::size_t j = 0; j < n; ++j) st.pi[j] += h * bath.couplings[j] * fx;
    }

    void drift(SystemState& st) const
    {
        st.x += dt * st.p;
        const std::size_t n = bath.size();
        for (std::size_t j = 0; j < n; ++j) {
            const double e = st.eta[j];
            const double q = st.pi[j];
            st.eta[j] = cos_[j] * e + sin_over_nu_[j] * q;
            st.pi[j] = -nu_sin_[j] * e + cos_[j] * q;
        }
    }

    void step(SystemState& st) const
    {
        kick(st, 0.5 * dt);
        drift(st);
        kick(st, 0.5 * dt);
        st.t += dt;
    }
};

double coupling_sum(const DiscreteBath& bath, const SystemState& st)
{
    double s = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j)
        s += bath.weights[j] * bath.couplings[j] * st.eta[j];
    return s;
}

// A-priori bounds implied by the initial energy; used with a 10x slack as
// integration-failure tripwires.
MonitorReport make_monitors(const DiscreteBath& bath, const OscillatorModel& osc, double E0)
{
    MonitorReport m;
    const double Kd = discrete_dissipation_constant(bath);
    Polynomial Veff = osc.effective_potential(Kd);

    double L = 1.0;
    double vmin = 0.0;
    bool coercive = Veff.degree() >= 2 && Veff.degree() % 2 == 0 && Veff.leading_coefficient() > 0.0;
    if (coercive) {
        for (int iter = 0; iter < 60; ++iter) {
            vmin = 0.0;
            for (int k = -64; k <= 64; ++k) vmin = std::min(vmin, Veff(L * k / 64.0));
            if (Veff(L) > E0 - vmin && Veff(-L) > E0 - vmin) break;
            L *= 2.0;
        }
    } else {
        L = std::numeric_limits<double>::infinity();
    }

    double fmax = 0.0;
    if (std::isfinite(L)) {
        for (int k = -64; k <= 64; ++k) fmax = std::max(fmax, std::abs(osc.f(L * k / 64.0)));
    } else {
        fmax = std::numeric_limits<double>::infinity();
    }

    const double Eplus = std::max(E0 - vmin, 0.0);
    m.psi_bound = fmax;
    m.phi_bound = Kd * fmax + std::sqrt(std::max(2.0 * Kd * Eplus, 0.0) + Kd * Kd * fmax * fmax);
    m.bath_energy_bound = 2.0 * (Eplus + fmax * m.phi_bound) + Kd * fmax * fmax;
    return m;
}

void observe(MonitorReport& m, double psi, double phi, double e_bath)
{
    m.max_abs_psi = std::max(m.max_abs_psi, std::abs(psi));
    m.max_abs_phi = std::max(m.max_abs_phi, std::abs(phi));
    m.max_bath_energy = std::max(m.max_bath_energy, e_bath);
    if (std::isfinite(m.psi_bound) && m.max_abs_psi > 10.0 * m.psi_bound) m.psi_ok = false;
    if (std::isfinite(m.phi_bound) && m.max_abs_phi > 10.0 * m.phi_bound) m.phi_ok = false;
    if (std::isfinite(m.bath_energy_bound) && m.max_bath_energy > 10.0 * m.bath_energy_bound)
        m.bath_ok = false;
}

} // namespace

void step_strang(SystemState& state, double dt, const DiscreteBath& bath,
                 const OscillatorModel& osc)
{
    if (dt == 0.0) throw InvalidArgument("step_strang: dt must be nonzero");
    if (state.eta.size() != bath.size())
        throw InvalidArgument("step_strang: state size does not match bath size");
    Stepper stepper(bath, osc, dt);
    stepper.step(state);
}

TrajectoryRecord run(const DiscreteBath& bath, const OscillatorModel& osc,
                     const SystemState& init, const RunOptions& options)
{
    if (!(options.dt > 0.0)) throw InvalidArgument("run: dt must be positive");
    if (!(options.duration > 0.0)) throw InvalidArgument("run: duration must be positive");
    if (options.sample_stride < 1) throw InvalidArgument("run: sample_stride must be >= 1");
    if (init.eta.size() != bath.size())
        throw InvalidArgument("run: initial state does not match bath size");

    const double horizon = recurrence_time(bath);
    if (options.duration > options.recurrence_safety * horizon && !options.override_recurrence_guard)
        throw IntegrationError(
            "requested horizon exceeds the recurrence guard (" +
            std::to_string(options.recurrence_safety * horizon) +
            "); shrink T, enlarge the bath, or override the guard");

    const auto n_steps = static_cast<std::size_t>(std::llround(options.duration / options.dt));
    if (n_steps == 0) throw InvalidArgument("run: duration shorter than one step");

    Stepper stepper(bath, osc, options.dt);
    SystemState state = init;
    state.t = 0.0;

    TrajectoryRecord rec;
    rec.dt = options.dt;
    rec.duration = static_cast<double>(n_steps) * options.dt;
    rec.sample_stride = options.sample_stride;
    rec.n_modes = bath.size();
    rec.seed = options.seed;
    rec.recurrence_horizon = horizon;

    const EnergyBreakdown e0 = total_energy(state, bath, osc);
    rec.monitors = make_monitors(bath, osc, e0.total);

    auto sample = [&](const SystemState& st) {
        const EnergyBreakdown e = total_energy(st, bath, osc);
        const double psi = osc.f(st.x);
        const double phi = coupling_sum(bath, st);
        rec.times.push_back(st.t);
        rec.x.push_back(st.x);
        rec.p.push_back(st.p);
        rec.psi.push_back(psi);
        rec.phi.push_back(phi);
        rec.e_total.push_back(e.total);
        rec.e_bath.push_back(e.bath_energy);
        if (options.store_bath_samples) {
            rec.eta_samples.push_back(st.eta);
            rec.pi_samples.push_back(st.pi);
        }
        observe(rec.monitors, psi, phi, e.bath_energy);
    };

    if (options.store_dense_psi) {
        rec.psi_dense.reserve(n_steps + 1);
        rec.psi_dense.push_back(osc.f(state.x));
    }
    sample(state);

    for (std::size_t k = 0; k < n_steps; ++k) {
        stepper.step(state);
        state.t = static_cast<double>(k + 1) * options.dt;
        if (options.store_dense_psi) rec.psi_dense.push_back(osc.f(state.x));
        if (!std::isfinite(state.x) || !std::isfinite(state.p))
            throw IntegrationError("trajectory diverged at t=" + std::to_string(state.t));
        if ((k + 1) % static_cast<std::size_t>(options.sample_stride) == 0 || k + 1 == n_steps)
            sample(state);
    }
    rec.final_state = std::move(state);
    return rec;
}

DuhamelReport duhamel_check(const TrajectoryRecord& record, const DiscreteBath& bath,
                            const BathInitialData& init)
{
    if (record.psi_dense.empty())
        throw InvalidArgument("duhamel_check: record lacks dense psi samples");
    if (record.eta_samples.empty())
        throw InvalidArgument("duhamel_check: record lacks bath snapshots");
    if (init.eta0.size() != bath.size())
        throw InvalidArgument("duhamel_check: initial data does not match bath size");

    const double dt = record.dt;
    const std::size_t n_steps = record.psi_dense.size() - 1;

    DuhamelReport rep;
    rep.per_mode.assign(bath.size(), 0.0);

    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double nu = bath.nodes[j];
        const double a = bath.couplings[j];
        const std::complex<double> eta_bullet = init.mode_amplitude(j, nu);

        // Cumulative Simpson of g(s) = e^{-i nu s} psi(s): even prefixes by
        // the 1/3 rule, odd prefixes closed with the 3/8 rule over the last
        // three intervals.  Rotors are renormalised periodically.
        const std::complex<double> rot = std::polar(1.0, -nu * dt);
        std::complex<double> g[4];  // ring buffer: g[k & 3]
        g[0] = std::complex<double>(record.psi_dense[0], 0.0);
        std::complex<double> phase(1.0, 0.0);
        std::complex<double> chain_curr(0.0, 0.0);  // Simpson prefix at the last even k
        std::complex<double> chain_prev(0.0, 0.0);  // ... and at the even k before it

        std::size_t sample_index = 0;
        for (std::size_t k = 0; k <= n_steps; ++k) {
            std::complex<double> prefix;
            if (k == 0) {
                prefix = 0.0;
            } else if (k % 2 == 0) {
                prefix = chain_curr;
            } else if (k == 1) {
                prefix = 0.5 * dt * (g[0] + g[1]);
            } else {
                prefix = chain_prev + 0.375 * dt *
                                          (g[(k - 3) & 3] + 3.0 * g[(k - 2) & 3] +
                                           3.0 * g[(k - 1) & 3] + g[k & 3]);
            }

            const double t = static_cast<double>(k) * dt;
            while (sample_index < record.times.size() &&
                   std::abs(record.times[sample_index] - t) < 0.5 * dt) {
                const std::complex<double> fwd = std::polar(1.0, nu * t);
                const std::complex<double> z = fwd * (eta_bullet + a * prefix);
                const double eta_rebuilt = z.imag() / nu;
                const double eta_sim = record.eta_samples[sample_index][j];
                rep.per_mode[j] = std::max(rep.per_mode[j], std::abs(eta_sim - eta_rebuilt));
                rep.max_eta = std::max(rep.max_eta, std::abs(eta_sim));
                ++sample_index;
            }
            if (k == n_steps) break;

            phase = (k + 1) % 1024 == 0 ? std::polar(1.0, -nu * dt * static_cast<double>(k + 1))
                                        : phase * rot;
            g[(k + 1) & 3] = phase * record.psi_dense[k + 1];
            if ((k + 1) % 2 == 0) {
                chain_prev = chain_curr;
                chain_curr += dt / 3.0 *
                              (g[(k - 1) & 3] + 4.0 * g[k & 3] + g[(k + 1) & 3]);
            }
        }
        rep.max_residual = std::max(rep.max_residual, rep.per_mode[j]);
    }
    return rep;
}

namespace {

struct Rhs {
    const DiscreteBath& bath;
    const OscillatorModel& osc;
    Polynomial V0p;
    Polynomial fp;

    Rhs(const DiscreteBath& b, const OscillatorModel& o)
        : bath(b), osc(o), V0p(o.V0.derivative()), fp(o.f.derivative())
    {
    }

    // y = [x, p, eta..., pi...]
    void operator()(const std::vector<double>& y, std::vector<double>& dy) const
    {
        const std::size_t n = bath.size();
        const double x = y[0];
        double coupling = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            coupling += bath.weights[j] * bath.couplings[j] * y[2 + j];
        dy[0] = y[1];
        dy[1] = -V0p(x) + fp(x) * coupling;
        const double fx = osc.f(x);
        for (std::size_t j = 0; j < n; ++j) {
            const double nu = bath.nodes[j];
            dy[2 + j] = y[2 + n + j];
            dy[2 + n + j] = -nu * nu * y[2 + j] + bath.couplings[j] * fx;
        }
    }
};

} // namespace

TrajectoryRecord oracle_run(const DiscreteBath& bath, const OscillatorModel& osc,
                            const SystemState& init, double rtol, double atol,
                            double duration, double sample_dt, std::size_t max_modes)
{
    if (bath.size() > max_modes)
        throw InvalidArgument("oracle_run: bath too large for the reference integrator");
    if (!(duration > 0.0) || !(sample_dt > 0.0))
        throw InvalidArgument("oracle_run: duration and sample_dt must be positive");
    if (!(rtol > 0.0) || !(atol > 0.0))
        throw InvalidArgument("oracle_run: tolerances must be positive");

    // Dormand-Prince 5(4) coefficients (autonomous system: no time nodes needed).
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t n = bath.size();
    const std::size_t dim = 2 + 2 * n;
    Rhs rhs(bath, osc);

    std::vector<double> y(dim), ynew(dim), yerr(dim), k1(dim), k2(dim), k3(dim), k4(dim), k5(dim),
        k6(dim), k7(dim), ytmp(dim);
    y[0] = init.x;
    y[1] = init.p;
    for (std::size_t j = 0; j < n; ++j) {
        y[2 + j] = init.eta[j];
        y[2 + n + j] = init.pi[j];
    }

    TrajectoryRecord rec;
    rec.dt = sample_dt;
    rec.duration = duration;
    rec.n_modes = n;
    rec.recurrence_horizon = recurrence_time(bath);
    rec.monitors = MonitorReport{};

    auto sample = [&](double t) {
        SystemState st;
        st.t = t;
        st.x = y[0];
        st.p = y[1];
        st.eta.assign(y.begin() + 2, y.begin() + 2 + static_cast<std::ptrdiff_t>(n));
        st.pi.assign(y.begin() + 2 + static_cast<std::ptrdiff_t>(n), y.end());
        const EnergyBreakdown e = total_energy(st, bath, osc);
        rec.times.push_back(t);
        rec.x.push_back(st.x);
        rec.p.push_back(st.p);
        rec.psi.push_back(osc.f(st.x));
        rec.phi.push_back(coupling_sum(bath, st));
        rec.e_total.push_back(e.total);
        rec.e_bath.push_back(e.bath_energy);
    };

    sample(0.0);

    double t = 0.0;
    double h = sample_dt / 8.0;
    const std::size_t n_samples = static_cast<std::size_t>(std::llround(duration / sample_dt));
    for (std::size_t s = 1; s <= n_samples; ++s) {
        const double t_target = static_cast<double>(s) * sample_dt;
        while (t < t_target - 1e-14 * duration) {
            h = std::min(h, t_target - t);
            if (h < 1e-14 * duration)
                throw IntegrationError("oracle_run: step size underflow at t=" + std::to_string(t));

            rhs(y, k1);
            for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
            rhs(ytmp, k2);
            for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            rhs(ytmp, k3);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(ytmp, k4);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(ytmp, k5);
            for (std::size_t i = 0; i < dim; ++i)
                ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                      a65 * k5[i]);
            rhs(ytmp, k6);
            for (std::size_t i = 0; i < dim; ++i)
                ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            rhs(ynew, k7);

            double err = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                               e7 * k7[i]);
                const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                const double q = yerr[i] / scale;
                err += q * q;
            }
            err = std::sqrt(err / static_cast<double>(dim));

            if (err <= 1.0) {
                t += h;
                y.swap(ynew);
            }
            const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(factor, 0.2, 5.0);
        }
        t = t_target;
        sample(t);
    }
    rec.final_state.t = t;
    rec.final_state.x = y[0];
    rec.final_state.p = y[1];
    rec.final_state.eta.assign(y.begin() + 2, y.begin() + 2 + static_cast<std::ptrdiff_t>(n));
    rec.final_state.pi.assign(y.begin() + 2 + static_cast<std::ptrdiff_t>(n), y.end());
    return rec;
}

} // namespace bathsim
