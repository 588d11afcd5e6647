#include "bathsim/reduced.hpp"
#include "bathsim/errors.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>

namespace bathsim {

MemoryKernel build_kernel(const BathSpectrum& spec, const QuadratureSpec& quad,
                          double dt, double duration)
{
    if (!(dt > 0.0) || !(duration > 0.0))
        throw InvalidArgument("build_kernel: dt and duration must be positive");
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));

    MemoryKernel kernel;
    kernel.dt = dt;
    kernel.source = KernelSource::Continuum;
    kernel.samples.assign(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        const QuadResult r = memory_kernel_at(spec, static_cast<double>(k) * dt, quad);
        kernel.samples[k] = r.value;
        kernel.truncation_error = std::max(kernel.truncation_error, r.error_estimate);
    }
    return kernel;
}

MemoryKernel build_kernel(const DiscreteBath& bath, double dt, double duration)
{
    if (!(dt > 0.0) || !(duration > 0.0))
        throw InvalidArgument("build_kernel: dt and duration must be positive");
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));

    MemoryKernel kernel;
    kernel.dt = dt;
    kernel.source = KernelSource::DiscreteSum;
    kernel.samples.assign(n + 1, 0.0);

    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double nu = bath.nodes[j];
        const double a = bath.couplings[j];
        const double amp = bath.weights[j] * a * a / nu;
        if (amp == 0.0) continue;
        // sin(nu k dt) by rotor recurrence, renormalised periodically.
        const std::complex<double> rot = std::polar(1.0, nu * dt);
        std::complex<double> phase(1.0, 0.0);
        for (std::size_t k = 1; k <= n; ++k) {
            phase = (k % 4096 == 0) ? std::polar(1.0, nu * dt * static_cast<double>(k))
                                    : phase * rot;
            kernel.samples[k] += amp * phase.imag();
        }
    }
    return kernel;
}

FluctuatingForce::FluctuatingForce(const DiscreteBath& bath, const BathInitialData& data)
{
    if (data.eta0.size() != bath.size())
        throw InvalidArgument("FluctuatingForce: initial data does not match bath size");
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double wa = bath.weights[j] * bath.couplings[j];
        const double cc = wa * data.eta0[j];
        const double cs = wa * data.etadot0[j] / bath.nodes[j];
        if (cc == 0.0 && cs == 0.0) continue;
        nu_.push_back(bath.nodes[j]);
        coeff_cos_.push_back(cc);
        coeff_sin_.push_back(cs);
        bound_ += std::sqrt(cc * cc + cs * cs);
    }
    zero_ = nu_.empty();
}

double FluctuatingForce::operator()(double t) const
{
    double f = 0.0;
    for (std::size_t j = 0; j < nu_.size(); ++j)
        f += coeff_cos_[j] * std::cos(nu_[j] * t) + coeff_sin_[j] * std::sin(nu_[j] * t);
    return f;
}

TrajectoryRecord gle_run(const OscillatorModel& osc, const MemoryKernel& kernel,
                         const FluctuatingForce& force, double x0, double p0,
                         const GleOptions& options)
{
    if (!(options.dt > 0.0)) throw InvalidArgument("gle_run: dt must be positive");
    if (!(options.duration > 0.0)) throw InvalidArgument("gle_run: duration must be positive");
    if (options.sample_stride < 1) throw InvalidArgument("gle_run: sample_stride must be >= 1");
    if (std::abs(kernel.dt - options.dt) > 1e-12 * std::max(1.0, options.dt))
        throw InvalidArgument("gle_run: kernel dt does not match integration dt");

    const auto n_steps = static_cast<std::size_t>(std::llround(options.duration / options.dt));
    if (kernel.samples.size() < n_steps + 1)
        throw InvalidArgument("gle_run: kernel does not cover the requested horizon");

    const double dt = options.dt;
    const Polynomial V0p = osc.V0.derivative();
    const Polynomial fp = osc.f.derivative();
    const double* w = kernel.samples.data();

    std::vector<double> f_hist(n_steps + 1, 0.0);

    TrajectoryRecord rec;
    rec.dt = dt;
    rec.duration = static_cast<double>(n_steps) * dt;
    rec.sample_stride = options.sample_stride;
    rec.n_modes = 0;

    double x = x0, p = p0;
    f_hist[0] = osc.f(x);

    // Trapezoidal memory integral over the recorded forcing history.  The
    // newest endpoint carries weight w(0)/2 = 0, so the memory at step k
    // never needs f(x_k) and the march stays explicit.
    auto memory_at = [&](std::size_t k) {
        if (k == 0) return 0.0;
        double m = 0.5 * w[k] * f_hist[0];
        for (std::size_t i = 1; i < k; ++i) m += w[k - i] * f_hist[i];
        return m * dt;
    };
    auto accel = [&](double xq, double mem, double t) {
        return -V0p(xq) + fp(xq) * (mem + force(t));
    };

    auto sample = [&](double t, double mem) {
        rec.times.push_back(t);
        rec.x.push_back(x);
        rec.p.push_back(p);
        rec.psi.push_back(osc.f(x));
        rec.phi.push_back(mem + force(t));
        rec.e_total.push_back(0.5 * p * p + osc.V0(x));
        rec.e_bath.push_back(0.0);
    };

    if (options.store_dense_psi) {
        rec.psi_dense.reserve(n_steps + 1);
        rec.psi_dense.push_back(f_hist[0]);
    }
    sample(0.0, 0.0);

    double a_curr = accel(x, 0.0, 0.0);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t_next = static_cast<double>(k + 1) * dt;
        x += dt * p + 0.5 * dt * dt * a_curr;           // predict position
        f_hist[k + 1] = osc.f(x);
        const double mem_next = memory_at(k + 1);
        const double a_next = accel(x, mem_next, t_next);
        p += 0.5 * dt * (a_curr + a_next);              // corrected momentum
        a_curr = a_next;

        if (!std::isfinite(x) || !std::isfinite(p))
            throw IntegrationError("gle_run: trajectory diverged at t=" + std::to_string(t_next));
        if (options.store_dense_psi) rec.psi_dense.push_back(f_hist[k + 1]);
        if ((k + 1) % static_cast<std::size_t>(options.sample_stride) == 0 || k + 1 == n_steps)
            sample(t_next, mem_next);
    }
    return rec;
}

void write_kernel_csv(std::ostream& out, const MemoryKernel& kernel)
{
    out << "tau,w\n";
    char buf[80];
    for (std::size_t k = 0; k < kernel.samples.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", kernel.dt * static_cast<double>(k),
                      kernel.samples[k]);
        out << buf;
    }
}

} // namespace bathsim
