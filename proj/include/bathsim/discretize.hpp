// discretize.hpp - finite-mode stand-in for the continuum bath.
//
// Modes sit on composite Gauss-Legendre nodes of [nu0, nu_max]; the weights
// absorb both the quadrature rule and the factor 2 of the even extension, so
// sums over modes are drop-in replacements for the continuum integrals.

#pragma once

#include "bathsim/quadrature.hpp"
#include "bathsim/spectrum.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace bathsim {

struct DiscreteBath {
    std::vector<double> nodes;      // frequencies nu_j, strictly increasing, > nu0
    std::vector<double> weights;    // quadrature weights (even-extension factor included)
    std::vector<double> couplings;  // a(nu_j)

    std::size_t size() const { return nodes.size(); }
};

// Place N modes on [nu0, nu_max] with composite Gauss-Legendre panels.
// The panel count is taken from quad.panels, clamped so every panel keeps at
// least two nodes.
DiscreteBath sample_modes(const BathSpectrum& spec, const QuadratureSpec& quad, int n_modes);

// Discrete analogue sum w_j a_j^2 / nu_j^2 of the dissipation constant.
double discrete_dissipation_constant(const DiscreteBath& bath);

// Horizon 2*pi / min node gap beyond which the finite bath re-feeds energy
// and stops mimicking dissipation.
double recurrence_time(const DiscreteBath& bath);

// Smallest root of the discrete secular function
//   S(lambda) = v - lambda^2 - sum w_j a_j^2 / (nu_j^2 - lambda^2)
// on [0, nu_min - guard); nullopt when S stays positive there.
// Requires v - discrete_K > 0.
std::optional<double> discrete_eigenfrequency(const DiscreteBath& bath, double v,
                                              double tol = 1e-10, double guard = 1e-3);

enum class BathInitKind { Zero, Thermal };

struct BathInitialData {
    std::vector<double> eta0;     // per-mode positions
    std::vector<double> etadot0;  // per-mode velocities
    BathInitKind kind{BathInitKind::Zero};
    double energy{0.0};           // discrete sum w_j (etadot0^2 + nu^2 eta0^2)

    bool all_zero() const;

    // Complex mode amplitude etadot0 + i nu eta0 entering the Duhamel and
    // energy-identity formulas.
    std::complex<double> mode_amplitude(std::size_t j, double nu) const
    {
        return {etadot0[j], nu * eta0[j]};
    }
};

// Zero data, or thermal data with per-mode expected intensity
// temperature * exp(-(nu/envelope_scale)^2), exponential amplitudes and
// uniform phases.  Deterministic for a fixed seed.
BathInitialData bath_initial(const DiscreteBath& bath, BathInitKind kind,
                             std::uint64_t seed = 0, double temperature = 0.0,
                             double envelope_scale = 1.0);

// Expected thermal energy and its standard deviation for the scheme above.
void thermal_energy_stats(const DiscreteBath& bath, double temperature,
                          double envelope_scale, double& mean, double& stddev);

// Two-way CSV (nu, weight, a_hat) for inspection.
void write_bath_csv(std::ostream& out, const DiscreteBath& bath);
DiscreteBath read_bath_csv(std::istream& in);

} // namespace bathsim
