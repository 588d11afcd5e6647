// dynamics.hpp - full coupled integration of oscillator + finite bath.
//
// Canonical variables are (x, p) and per-mode (eta_j, pi_j) with the
// quadrature weights folded into the mode masses, so the discrete energy is a
// plain Riemann sum of the continuum one.  The propagator is the symmetric
// splitting kick(dt/2) . drift(dt) . kick(dt/2), where the drift advances the
// free oscillator bath by exact rotations.

#pragma once

#include "bathsim/discretize.hpp"
#include "bathsim/spectrum.hpp"

#include <cstdint>
#include <vector>

namespace bathsim {

struct SystemState {
    double t{0.0};
    double x{0.0};
    double p{0.0};
    std::vector<double> eta;
    std::vector<double> pi;
};

SystemState make_state(double x0, double p0, const BathInitialData& data);

struct EnergyBreakdown {
    double total{0.0};              // p^2/2 + V0 + bath + coupling
    double kinetic_x{0.0};          // p^2/2
    double kinetic_bath{0.0};       // (1/2) sum w pi^2
    double effective_potential{0.0};// V0(x) - K_d f(x)^2/2
    double completed_square{0.0};   // (1/2) sum w nu^2 (eta - a f / nu^2)^2
    double bath_energy{0.0};        // sum w (pi^2 + nu^2 eta^2)
    double coupling_sum{0.0};       // sum w a eta
};

// Conserved energy with its nonnegative four-term decomposition; the four
// terms re-sum to `total` up to roundoff.
EnergyBreakdown total_energy(const SystemState& state, const DiscreteBath& bath,
                             const OscillatorModel& osc);

// One symmetric splitting step of size dt (dt < 0 steps backwards).
void step_strang(SystemState& state, double dt, const DiscreteBath& bath,
                 const OscillatorModel& osc);

struct MonitorReport {
    double psi_bound{0.0};
    double phi_bound{0.0};
    double bath_energy_bound{0.0};
    double max_abs_psi{0.0};
    double max_abs_phi{0.0};
    double max_bath_energy{0.0};
    bool psi_ok{true};
    bool phi_ok{true};
    bool bath_ok{true};
    bool all_ok() const { return psi_ok && phi_ok && bath_ok; }
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> p;
    std::vector<double> psi;      // f(x)
    std::vector<double> phi;      // sum w a eta
    std::vector<double> e_total;
    std::vector<double> e_bath;

    // f(x) at every integration step (index k -> time k*dt), kept when the
    // Duhamel or energy-identity diagnostics are requested.
    std::vector<double> psi_dense;

    // Bath snapshots at sample times (small baths only).
    std::vector<std::vector<double>> eta_samples;
    std::vector<std::vector<double>> pi_samples;

    double dt{0.0};
    double duration{0.0};
    int sample_stride{1};
    std::size_t n_modes{0};
    std::uint64_t seed{0};
    double recurrence_horizon{0.0};
    MonitorReport monitors;
    SystemState final_state;
};

struct RunOptions {
    double dt{1e-3};
    double duration{10.0};
    int sample_stride{1};
    bool store_dense_psi{false};
    bool store_bath_samples{false};
    bool override_recurrence_guard{false};
    double recurrence_safety{0.5};
    std::uint64_t seed{0};  // recorded for provenance only
};

// Integrate with the splitting propagator, recording samples and the
// boundedness monitors.  Refuses horizons beyond
// recurrence_safety * recurrence_time(bath) unless overridden; throws
// IntegrationError when the state stops being finite.
TrajectoryRecord run(const DiscreteBath& bath, const OscillatorModel& osc,
                     const SystemState& init, const RunOptions& options);

struct DuhamelReport {
    double max_residual{0.0};      // max_j max_t |eta_sim - eta_reconstructed|
    double max_eta{0.0};           // scale for relative statements
    std::vector<double> per_mode;  // residual per mode
};

// Re-derive every mode from the recorded forcing history
//   eta_j(t) = free rotation + (a_j/nu_j) int_0^t sin(nu_j (t-s)) psi(s) ds
// and compare with the simulated modes at the sample times.  The convolution
// uses cumulative Simpson so the residual measures the genuine second-order
// time-quadrature defect.  Needs dense psi and bath snapshots in the record.
DuhamelReport duhamel_check(const TrajectoryRecord& record, const DiscreteBath& bath,
                            const BathInitialData& init);

// Reference trajectory from an adaptive embedded Runge-Kutta (order 5/4) on
// the full first-order system; small baths only.
TrajectoryRecord oracle_run(const DiscreteBath& bath, const OscillatorModel& osc,
                            const SystemState& init, double rtol, double atol,
                            double duration, double sample_dt,
                            std::size_t max_modes = 256);

} // namespace bathsim
