// reduced.hpp - memory-kernel form of the dynamics.
//
// Instead of carrying the bath, the oscillator feels its own past through
//   xdd = -V0'(x) + f'(x) [ (w * f(x))(t) + F0(t) ],
// with w the time-domain kernel of the bath and F0 the force carried by the
// bath initial data alone.  This is the reduced equation the full runs are
// cross-validated against.

#pragma once

#include "bathsim/discretize.hpp"
#include "bathsim/dynamics.hpp"
#include "bathsim/spectrum.hpp"

#include <iosfwd>
#include <vector>

namespace bathsim {

enum class KernelSource { Continuum, DiscreteSum };

struct MemoryKernel {
    double dt{0.0};
    std::vector<double> samples;  // w(k dt); samples[0] == 0, odd extension implied
    KernelSource source{KernelSource::Continuum};
    double truncation_error{0.0};  // worst per-sample quadrature + tail estimate

    double duration() const { return samples.empty() ? 0.0 : dt * static_cast<double>(samples.size() - 1); }
};

// Tabulate w on the step grid from the continuum spectrum ...
MemoryKernel build_kernel(const BathSpectrum& spec, const QuadratureSpec& quad,
                          double dt, double duration);
// ... or from the exact finite-bath sum  sum_j w_j a_j^2 sin(nu_j tau) / nu_j.
MemoryKernel build_kernel(const DiscreteBath& bath, double dt, double duration);

// Force exerted by the freely rotating bath initial data,
//   F0(t) = sum_j w_j a_j (eta0_j cos nu_j t + etadot0_j sin(nu_j t)/nu_j).
// Exact trigonometric evaluation; identically zero for quiescent data.
class FluctuatingForce {
public:
    FluctuatingForce() = default;
    FluctuatingForce(const DiscreteBath& bath, const BathInitialData& data);

    double operator()(double t) const;
    bool is_zero() const { return zero_; }

    // Triangle-inequality bound sum_j w_j a_j sqrt(eta0^2 + (etadot0/nu)^2),
    // valid for every t.
    double amplitude_bound() const { return bound_; }

private:
    std::vector<double> nu_;
    std::vector<double> coeff_cos_;
    std::vector<double> coeff_sin_;
    double bound_{0.0};
    bool zero_{true};
};

struct GleOptions {
    double dt{1e-3};
    double duration{10.0};
    int sample_stride{1};
    bool store_dense_psi{false};
};

// March the integro-differential equation with trapezoidal memory and a
// second-order predictor-corrector; O(steps^2) work.  The record mirrors the
// full-run schema with phi = memory integral + F0 and e_total the bare
// oscillator energy.
TrajectoryRecord gle_run(const OscillatorModel& osc, const MemoryKernel& kernel,
                         const FluctuatingForce& force, double x0, double p0,
                         const GleOptions& options);

void write_kernel_csv(std::ostream& out, const MemoryKernel& kernel);

} // namespace bathsim
