// quadrature.hpp - Gauss-Legendre rules (composite and adaptive) used for all
// continuum bath functionals.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace bathsim {

enum class QuadRule { CompositeGaussLegendre, Adaptive };

// How to integrate over the truncated frequency axis.  The continuum formulas
// run over all of R; the artifact integrates the even extension on
// [nu0, nu_max] and doubles, so nu_max and the reported truncation estimate
// are part of every result.
struct QuadratureSpec {
    QuadRule rule{QuadRule::Adaptive};
    int panels{32};              // composite rule: number of equal panels
    int points_per_panel{16};    // composite rule: Gauss nodes per panel
    int max_subdivisions{4000};  // adaptive rule: interval budget
    double nu_max{8.0};          // frequency cutoff
    double abs_tol{1e-12};
    double rel_tol{1e-10};
};

struct QuadResult {
    double value{0.0};
    double error_estimate{0.0};  // quadrature error (truncation reported separately)
    bool converged{true};
};

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
// Computed by Newton iteration on the Legendre recurrence; n <= 512.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Same rule mapped onto [a, b].
void gauss_legendre_on(int n, double a, double b,
                       std::vector<double>& nodes, std::vector<double>& weights);

// Integrate f over [a, b] with `panels` equal panels of `points` Gauss nodes.
// The error estimate compares against the half-resolution composite rule.
QuadResult composite_gl(const std::function<double(double)>& f,
                        double a, double b, int panels, int points);

// Globally adaptive bisection; each interval is judged by |G15 - G7|.
// `initial_panels` pre-splits the interval, which keeps oscillatory
// integrands (kernel evaluation at large tau) from fooling the estimator.
QuadResult adaptive_gl(const std::function<double(double)>& f,
                       double a, double b, double abs_tol, double rel_tol,
                       int max_subdivisions, int initial_panels = 1);

// Dispatch on spec.rule over [a, b].  Throws QuadratureError if the adaptive
// rule exhausts its interval budget without reaching tolerance.
QuadResult integrate(const std::function<double(double)>& f,
                     double a, double b, const QuadratureSpec& spec,
                     int initial_panels = 1);

} // namespace bathsim
