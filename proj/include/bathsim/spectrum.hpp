// spectrum.hpp - continuum bath descriptions and their spectral functionals.
//
// A bath enters the oscillator dynamics only through the coupling density
// a(nu) = kappa / sqrt(rho), extended evenly and by zero across the gap
// [-nu0, nu0].  Everything downstream (dissipation constant, memory kernel,
// gap kernel, eigenfrequency) is a functional of a^2.

#pragma once

#include "bathsim/polynomial.hpp"
#include "bathsim/quadrature.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bathsim {

enum class SpectrumFamily { GaussianGapless, GaussianGap, Tabulated, KleinGordon };

struct TablePoint {
    double nu{0.0};
    double a_hat{0.0};
};

struct BathSpectrum {
    SpectrumFamily family{SpectrumFamily::GaussianGapless};
    double nu0{0.0};        // gap edge; a == 0 on [-nu0, nu0]
    double amplitude{1.0};  // overall coupling strength c
    double edge{1.0};       // GaussianGap: a^2 ~ c (nu^2-nu0^2)^edge e^{-nu^2}

    std::vector<TablePoint> table;  // Tabulated family, strictly increasing nu

    // Klein-Gordon construction data (kept so the change of variables can be
    // checked against the flat-measure form; the dynamics never uses them).
    std::function<double(double)> kg_rho0;
    std::function<double(double)> kg_kappa;

    static BathSpectrum gaussian_gapless(double amplitude = 0.5641895835477563);  // 1/sqrt(pi)
    static BathSpectrum gaussian_gap(double nu0, double amplitude = 1.0, double edge = 1.0);
    static BathSpectrum tabulated(std::vector<TablePoint> table, double nu0 = 0.0);
};

// Coupling density a(|nu|); exactly zero on the gap.  Tabulated spectra are
// interpolated linearly and throw DomainError outside their table.
double a_hat(const BathSpectrum& spec, double nu);
double a_hat_sq(const BathSpectrum& spec, double nu);

// Upper estimate of the neglected mass 2*int_{nu_max}^inf a^2(nu) dnu.
// Closed form for the Gaussian families, heuristic decay estimate otherwise.
double truncation_mass_bound(const BathSpectrum& spec, double nu_max);

// Oscillator side: polynomial potential V0 and coupling shape f (default x).
struct OscillatorModel {
    Polynomial V0;
    Polynomial f{std::vector<double>{0.0, 1.0}};

    // Stiffness of the linearisation at the origin, v = V0''(0).
    double stiffness() const;
    bool f_is_identity() const;
    bool is_linear_case() const;  // V0 = v x^2 / 2 with f = x
    Polynomial effective_potential(double K) const;  // V0 - K f^2 / 2
};

// K = int a^2 / nu^2 dnu over the even extension.  Throws QuadratureError
// when the integral fails to converge (the runtime face of non-integrability).
QuadResult dissipation_constant(const BathSpectrum& spec, const QuadratureSpec& quad);

// Time-domain memory kernel w(tau) = int a^2(nu) sin(nu tau) / nu dnu.
// Odd in tau with w(0) = 0.
QuadResult memory_kernel_at(const BathSpectrum& spec, double tau, const QuadratureSpec& quad);

struct GapValue {
    double value{0.0};
    double error_estimate{0.0};
    bool near_edge{false};  // |nu| within the guard band of the gap edge
};

// Gap kernel int a^2(lambda) / (lambda^2 - nu^2) dlambda for |nu| <= nu0.
// Real, even, nondecreasing on [0, nu0]; equals K at nu = 0.  Queries outside
// the gap throw DomainError (no principal value branch here).
GapValue gap_kernel(const BathSpectrum& spec, double nu, const QuadratureSpec& quad,
                    double edge_guard = 1e-3);

// Secular function Phi(nu) = -nu^2 + v - gap_kernel(nu); decreasing on the
// gap with Phi(0) = v - K.
GapValue secular_phi(const BathSpectrum& spec, double v, double nu,
                     const QuadratureSpec& quad, double edge_guard = 1e-3);

// Smallest-eigenvalue search: the root of Phi on (0, nu0) when it exists.
// Returns nullopt when Phi stays positive up to the edge (the bath swallows
// everything and the oscillator decays) and when nu0 == 0.  Requires the
// positivity condition v - K > 0.
std::optional<double> find_eigenfrequency(const BathSpectrum& spec, double v,
                                          const QuadratureSpec& quad,
                                          double tol = 1e-10, double edge_guard = 1e-3);

// Bath of a Klein-Gordon field with mass m0: dispersion nu^2 = m0^2 + s^2
// maps the flat measure rho0(s) ds onto rho(nu) dnu with
// rho = rho0(s) / sqrt(1 - m0^2/nu^2).  kappa must vanish on the gap.
BathSpectrum klein_gordon_spectrum(std::function<double(double)> rho0, double m0,
                                   std::function<double(double)> kappa);

// Oscillator density rho(nu) of a Klein-Gordon spectrum (zero on the gap).
double klein_gordon_density(const BathSpectrum& spec, double nu);

// Real critical points of the effective potential V0 - K x^2/2, ascending.
// Restricted to f(x) = x.
std::vector<double> effective_critical_points(const OscillatorModel& osc, double K,
                                              double tol = 1e-12);

struct HypothesisCheck {
    std::string id;
    bool passed{false};
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_passed() const;
    const HypothesisCheck* find(const std::string& id) const;
};

// Machine checks of the standing assumptions: coupling support and sign,
// integrability of a^2 and a^2/nu^2, vanishing of a and a^2/nu at zero,
// coercivity of the effective potential, positivity v - K for the linear
// case, and monotonicity of the gap kernel.
HypothesisReport validate_hypotheses(const BathSpectrum& spec, const OscillatorModel& osc,
                                     const QuadratureSpec& quad);

} // namespace bathsim
