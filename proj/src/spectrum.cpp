#include "bathsim/spectrum.hpp"
#include "bathsim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bathsim {

BathSpectrum BathSpectrum::gaussian_gapless(double amplitude)
{
    BathSpectrum s;
    s.family = SpectrumFamily::GaussianGapless;
    s.nu0 = 0.0;
    s.amplitude = amplitude;
    return s;
}

BathSpectrum BathSpectrum::gaussian_gap(double nu0, double amplitude, double edge)
{
    if (nu0 < 0.0) throw InvalidArgument("gaussian_gap: nu0 must be >= 0");
    if (edge <= 0.0 || edge > 2.0) throw InvalidArgument("gaussian_gap: edge exponent must be in (0, 2]");
    BathSpectrum s;
    s.family = SpectrumFamily::GaussianGap;
    s.nu0 = nu0;
    s.amplitude = amplitude;
    s.edge = edge;
    return s;
}

BathSpectrum BathSpectrum::tabulated(std::vector<TablePoint> table, double nu0)
{
    if (table.size() < 2) throw InvalidArgument("tabulated: need at least two samples");
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].nu < 0.0) throw InvalidArgument("tabulated: frequencies must be >= 0");
        if (i > 0 && table[i].nu <= table[i - 1].nu)
            throw InvalidArgument("tabulated: frequencies must be strictly increasing");
    }
    BathSpectrum s;
    s.family = SpectrumFamily::Tabulated;
    s.nu0 = nu0;
    s.table = std::move(table);
    return s;
}

namespace {

double interpolate_table(const std::vector<TablePoint>& table, double nu)
{
    if (nu < table.front().nu || nu > table.back().nu)
        throw DomainError("tabulated spectrum queried outside its table range");
    auto it = std::upper_bound(table.begin(), table.end(), nu,
                               [](double x, const TablePoint& p) { return x < p.nu; });
    if (it == table.begin()) return table.front().a_hat;
    if (it == table.end()) return table.back().a_hat;
    const TablePoint& hi = *it;
    const TablePoint& lo = *(it - 1);
    const double t = (nu - lo.nu) / (hi.nu - lo.nu);
    return lo.a_hat + t * (hi.a_hat - lo.a_hat);
}

double lower_limit(const BathSpectrum& spec)
{
    double lo = spec.nu0;
    if (spec.family == SpectrumFamily::Tabulated && !spec.table.empty())
        lo = std::max(lo, spec.table.front().nu);
    return lo;
}

double upper_limit(const BathSpectrum& spec, const QuadratureSpec& quad)
{
    double hi = quad.nu_max;
    if (spec.family == SpectrumFamily::Tabulated && !spec.table.empty())
        hi = std::min(hi, spec.table.back().nu);
    return hi;
}

void require_band(const BathSpectrum& spec, const QuadratureSpec& quad)
{
    if (!(upper_limit(spec, quad) > lower_limit(spec)))
        throw InvalidArgument("quadrature cutoff nu_max must exceed the gap edge");
}

} // namespace

double a_hat_sq(const BathSpectrum& spec, double nu)
{
    const double av = std::abs(nu);
    if (av <= spec.nu0) return 0.0;
    switch (spec.family) {
        case SpectrumFamily::GaussianGapless:
            return spec.amplitude * av * av * std::exp(-av * av);
        case SpectrumFamily::GaussianGap:
            return spec.amplitude * std::pow(av * av - spec.nu0 * spec.nu0, spec.edge) *
                   std::exp(-av * av);
        case SpectrumFamily::Tabulated: {
            const double a = interpolate_table(spec.table, av);
            return a * a;
        }
        case SpectrumFamily::KleinGordon: {
            const double kappa = spec.kg_kappa(av);
            if (spec.nu0 == 0.0) {
                const double rho = spec.kg_rho0(av);
                if (!(rho > 0.0)) throw DomainError("Klein-Gordon density vanishes inside the band");
                return kappa * kappa / rho;
            }
            const double s = std::sqrt(av * av - spec.nu0 * spec.nu0);
            const double rho0 = spec.kg_rho0(s);
            if (!(rho0 > 0.0)) throw DomainError("Klein-Gordon density vanishes inside the band");
            return kappa * kappa * s / (rho0 * av);
        }
    }
    return 0.0;
}

double a_hat(const BathSpectrum& spec, double nu)
{
    const double av = std::abs(nu);
    if (av <= spec.nu0) return 0.0;
    if (spec.family == SpectrumFamily::Tabulated) return interpolate_table(spec.table, av);
    return std::sqrt(a_hat_sq(spec, nu));
}

double truncation_mass_bound(const BathSpectrum& spec, double nu_max)
{
    const double b = nu_max;
    switch (spec.family) {
        case SpectrumFamily::GaussianGapless:
        case SpectrumFamily::GaussianGap: {
            // int_b^inf nu^2 e^{-nu^2} = (b/2) e^{-b^2} + (sqrt(pi)/4) erfc(b);
            // the gap family with edge <= 1 is dominated by the same integrand,
            // edge in (1, 2] by the nu^4 moment.
            const double g2 = 0.5 * b * std::exp(-b * b) + 0.25 * std::sqrt(M_PI) * std::erfc(b);
            if (spec.family == SpectrumFamily::GaussianGap && spec.edge > 1.0) {
                const double g4 = (0.5 * b * b * b + 0.75 * b) * std::exp(-b * b) +
                                  0.375 * std::sqrt(M_PI) * std::erfc(b);
                return 2.0 * spec.amplitude * g4;
            }
            return 2.0 * spec.amplitude * g2;
        }
        case SpectrumFamily::Tabulated: {
            if (spec.table.back().nu <= nu_max) {
                const double a_end = spec.table.back().a_hat;
                if (a_end == 0.0) return 0.0;
                const std::size_t n = spec.table.size();
                const double width = spec.table[n - 1].nu - spec.table[n - 2].nu;
                return 2.0 * a_end * a_end * width;  // last-panel magnitude
            }
            // cutoff inside the table: the ignored tail is visible, sample it
            const double a_cut = interpolate_table(spec.table, nu_max);
            return 2.0 * a_cut * a_cut * (spec.table.back().nu - nu_max);
        }
        case SpectrumFamily::KleinGordon: {
            // No family decay law is known here; assume at least Gaussian-type
            // falloff past the cutoff and report a scaled sample.
            const double g = a_hat_sq(spec, b);
            return 2.0 * g * (0.5 / std::max(b, 1.0) + 1e-3);
        }
    }
    return 0.0;
}

double OscillatorModel::stiffness() const
{
    const auto& c = V0.coefficients();
    return c.size() > 2 ? 2.0 * c[2] : 0.0;
}

bool OscillatorModel::f_is_identity() const
{
    const auto& c = f.coefficients();
    if (f.degree() != 1) return false;
    return c[0] == 0.0 && c[1] == 1.0;
}

bool OscillatorModel::is_linear_case() const
{
    if (!f_is_identity()) return false;
    if (V0.degree() != 2) return false;
    const auto& c = V0.coefficients();
    return c[0] == 0.0 && c[1] == 0.0 && c[2] > 0.0;
}

Polynomial OscillatorModel::effective_potential(double K) const
{
    return V0 - (f * f).scaled(0.5 * K);
}

QuadResult dissipation_constant(const BathSpectrum& spec, const QuadratureSpec& quad)
{
    require_band(spec, quad);
    const double lo = lower_limit(spec);
    const double hi = upper_limit(spec, quad);
    QuadResult r = integrate([&](double nu) { return a_hat_sq(spec, nu) / (nu * nu); }, lo, hi, quad);
    r.value *= 2.0;
    r.error_estimate *= 2.0;
    // Tail of a^2/nu^2 past the cutoff is controlled by the mass tail.
    r.error_estimate += truncation_mass_bound(spec, hi) / (hi * hi);
    return r;
}

QuadResult memory_kernel_at(const BathSpectrum& spec, double tau, const QuadratureSpec& quad)
{
    if (tau == 0.0) return QuadResult{0.0, 0.0, true};
    require_band(spec, quad);
    const double lo = lower_limit(spec);
    const double hi = upper_limit(spec, quad);
    const double at = std::abs(tau);
    const double sign = tau > 0.0 ? 1.0 : -1.0;

    // Pre-split so every panel sees at most a few radians of sin(nu*tau).
    const int osc_panels = static_cast<int>(std::min(2048.0, std::ceil((hi - lo) * at / 4.0)));
    QuadResult r = integrate(
        [&](double nu) { return a_hat_sq(spec, nu) * std::sin(nu * at) / nu; },
        lo, hi, quad, std::max(1, osc_panels));
    r.value *= 2.0 * sign;
    r.error_estimate *= 2.0;
    r.error_estimate += truncation_mass_bound(spec, hi) / std::max(hi, 1.0);
    return r;
}

GapValue gap_kernel(const BathSpectrum& spec, double nu, const QuadratureSpec& quad,
                    double edge_guard)
{
    require_band(spec, quad);
    const double av = std::abs(nu);
    if (av > spec.nu0)
        throw DomainError("gap kernel is defined only on the spectral gap |nu| <= nu0");
    const double lo = lower_limit(spec);
    const double hi = upper_limit(spec, quad);

    QuadResult r = integrate(
        [&](double lam) { return a_hat_sq(spec, lam) / (lam * lam - av * av); }, lo, hi, quad);

    GapValue g;
    g.value = 2.0 * r.value;
    g.error_estimate = 2.0 * r.error_estimate +
                       truncation_mass_bound(spec, hi) / std::max(hi * hi - av * av, 1.0);
    g.near_edge = spec.nu0 > 0.0 && (spec.nu0 - av) < edge_guard * spec.nu0;
    return g;
}

GapValue secular_phi(const BathSpectrum& spec, double v, double nu,
                     const QuadratureSpec& quad, double edge_guard)
{
    GapValue g = gap_kernel(spec, nu, quad, edge_guard);
    g.value = -nu * nu + v - g.value;
    return g;
}

std::optional<double> find_eigenfrequency(const BathSpectrum& spec, double v,
                                          const QuadratureSpec& quad,
                                          double tol, double edge_guard)
{
    if (tol <= 0.0) throw InvalidArgument("find_eigenfrequency: tol must be positive");
    const double K = dissipation_constant(spec, quad).value;
    if (!(v - K > 0.0))
        throw InvalidArgument("find_eigenfrequency requires v - K > 0 (effective stiffness positive)");
    if (spec.nu0 <= 0.0) return std::nullopt;

    const double edge = spec.nu0 * (1.0 - edge_guard);
    auto phi = [&](double nu) { return secular_phi(spec, v, nu, quad, edge_guard).value; };

    const double phi_edge = phi(edge);
    if (phi_edge >= 0.0) return std::nullopt;  // Phi > 0 across the gap: no trapped mode

    // Phi(0) = v - K > 0 > Phi(edge), and Phi is decreasing: unique root.
    double a = 0.0, b = edge;
    double mid = 0.5 * (a + b);
    const double phi_scale = tol * std::max(1.0, std::abs(v));
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (a + b);
        const double pm = phi(mid);
        if ((b - a) <= tol && std::abs(pm) <= phi_scale) break;
        if (pm > 0.0)
            a = mid;
        else
            b = mid;
    }
    return mid;
}

BathSpectrum klein_gordon_spectrum(std::function<double(double)> rho0, double m0,
                                   std::function<double(double)> kappa)
{
    if (m0 < 0.0) throw InvalidArgument("klein_gordon_spectrum: m0 must be >= 0");
    if (!rho0 || !kappa) throw InvalidArgument("klein_gordon_spectrum: missing rho0 or kappa");

    // kappa must be supported where the bath has modes: zero across the gap.
    if (m0 > 0.0) {
        for (int k = 1; k <= 32; ++k) {
            const double nu = m0 * (k / 33.0);
            if (std::abs(kappa(nu)) > 1e-12)
                throw InvalidArgument("klein_gordon_spectrum: kappa does not vanish inside the gap");
        }
    }
    // rho0 positive off the origin, sampled over a working range.
    for (int k = 1; k <= 32; ++k) {
        const double s = 8.0 * k / 32.0;
        if (!(rho0(s) > 0.0))
            throw InvalidArgument("klein_gordon_spectrum: rho0 must be positive for s != 0");
    }
    for (int k = 1; k <= 16; ++k) {
        const double nu = m0 + 8.0 * k / 16.0;
        if (kappa(nu) < 0.0)
            throw InvalidArgument("klein_gordon_spectrum: kappa must be nonnegative");
    }

    BathSpectrum s;
    s.family = SpectrumFamily::KleinGordon;
    s.nu0 = m0;
    s.kg_rho0 = std::move(rho0);
    s.kg_kappa = std::move(kappa);
    return s;
}

double klein_gordon_density(const BathSpectrum& spec, double nu)
{
    if (spec.family != SpectrumFamily::KleinGordon)
        throw InvalidArgument("klein_gordon_density: not a Klein-Gordon spectrum");
    const double av = std::abs(nu);
    if (av <= spec.nu0) return 0.0;
    if (spec.nu0 == 0.0) return spec.kg_rho0(av);
    const double s = std::sqrt(av * av - spec.nu0 * spec.nu0);
    return spec.kg_rho0(s) * av / s;
}

std::vector<double> effective_critical_points(const OscillatorModel& osc, double K, double tol)
{
    if (!osc.f_is_identity())
        throw InvalidArgument("effective_critical_points is implemented for f(x) = x only");
    Polynomial grad = osc.V0.derivative() - Polynomial({0.0, K});
    if (grad.is_zero()) return {};  // V0 = K x^2/2: degenerate, every point critical
    if (grad.degree() == 0) return {};
    return grad.real_roots(tol);
}

bool HypothesisReport::all_passed() const
{
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

const HypothesisCheck* HypothesisReport::find(const std::string& id) const
{
    for (const auto& c : checks)
        if (c.id == id) return &c;
    return nullptr;
}

HypothesisReport validate_hypotheses(const BathSpectrum& spec, const OscillatorModel& osc,
                                     const QuadratureSpec& quad)
{
    HypothesisReport report;
    const double lo = lower_limit(spec);
    const double hi = upper_limit(spec, quad);

    // Support and sign of the coupling density.
    {
        bool ok = true;
        std::string detail;
        try {
            for (int k = 0; k <= 64; ++k) {
                const double nu = lo + (hi - lo) * k / 64.0;
                if (a_hat(spec, nu) < 0.0) {
                    ok = false;
                    detail = "coupling density negative at nu=" + std::to_string(nu);
                    break;
                }
            }
            if (ok && spec.nu0 > 0.0) {
                for (int k = 1; k < 8; ++k) {
                    const double nu = spec.nu0 * k / 8.0;
                    if (a_hat(spec, nu) != 0.0) {
                        ok = false;
                        detail = "coupling density nonzero inside the gap";
                        break;
                    }
                }
            }
        } catch (const Error& e) {
            ok = false;
            detail = e.what();
        }
        report.checks.push_back({"coupling_support", ok, ok ? "coupling vanishes on the gap, nonnegative outside" : detail});
    }

    // Integrability of a^2 and a^2/nu^2.
    double K = 0.0;
    bool have_K = false;
    {
        bool ok = true;
        std::string detail;
        try {
            QuadResult mass = integrate([&](double nu) { return a_hat_sq(spec, nu); }, lo, hi, quad);
            QuadResult kq = dissipation_constant(spec, quad);
            K = kq.value;
            have_K = true;
            detail = "K=" + std::to_string(K) + " (err<=" + std::to_string(kq.error_estimate) +
                     "), mass=" + std::to_string(2.0 * mass.value);
        } catch (const Error& e) {
            ok = false;
            detail = e.what();
        }
        report.checks.push_back({"integrability", ok, detail});
    }

    // a(0) = 0 and a^2(nu)/nu -> 0 near the origin.
    {
        bool ok = true;
        std::string detail = "a(0)=0 and a^2/nu -> 0";
        if (spec.nu0 == 0.0) {
            try {
                if (a_hat(spec, 0.0) != 0.0) {
                    ok = false;
                    detail = "a(0) != 0";
                } else {
                    double prev = 0.0;
                    bool first = true;
                    for (double nu : {1e-2, 1e-4, 1e-6}) {
                        if (nu <= lo) continue;
                        const double r = a_hat_sq(spec, nu) / nu;
                        if (!first && r > prev * 0.5 + 1e-12) {
                            ok = false;
                            detail = "a^2(nu)/nu does not vanish as nu -> 0";
                            break;
                        }
                        prev = r;
                        first = false;
                    }
                }
            } catch (const Error& e) {
                ok = false;
                detail = e.what();
            }
        }
        report.checks.push_back({"coupling_regularity", ok, detail});
    }

    // Effective potential bounded below and coercive.
    {
        bool ok = false;
        std::string detail;
        if (!have_K) {
            detail = "skipped: K unavailable";
        } else {
            Polynomial V = osc.effective_potential(K);
            const int d = V.degree();
            if (d >= 2 && d % 2 == 0 && V.leading_coefficient() > 0.0) {
                ok = true;
                detail = "effective potential coercive (degree " + std::to_string(d) + ")";
            } else {
                detail = "effective potential not coercive: degree " + std::to_string(d) +
                         ", leading coefficient " + std::to_string(V.leading_coefficient());
            }
        }
        report.checks.push_back({"effective_potential", ok, detail});
    }

    // Positivity v - K > 0 for the linear oscillator.
    {
        bool ok = true;
        std::string detail = "not a linear-oscillator configuration; check skipped";
        if (osc.is_linear_case() && have_K) {
            const double v = osc.stiffness();
            ok = v - K > 0.0;
            detail = "v - K = " + std::to_string(v - K);
        }
        report.checks.push_back({"case_a_positivity", ok, detail});
    }

    // Gap kernel real, even, nondecreasing across the gap.
    {
        bool ok = true;
        std::string detail = "gapless spectrum: gap reduces to {0}";
        if (spec.nu0 > 0.0) {
            try {
                const int samples = 9;
                double prev = 0.0;
                for (int k = 0; k < samples; ++k) {
                    const double nu = spec.nu0 * (1.0 - 2e-3) * k / (samples - 1);
                    GapValue g = gap_kernel(spec, nu, quad);
                    GapValue gm = gap_kernel(spec, -nu, quad);
                    if (g.value != gm.value) {
                        ok = false;
                        detail = "gap kernel not even";
                        break;
                    }
                    const double slack = 2.0 * (g.error_estimate + quad.abs_tol);
                    if (k > 0 && g.value < prev - slack) {
                        ok = false;
                        detail = "gap kernel not nondecreasing on [0, nu0]";
                        break;
                    }
                    prev = g.value;
                }
                if (ok) detail = "gap kernel even and nondecreasing on sampled gap points";
            } catch (const Error& e) {
                ok = false;
                detail = e.what();
            }
        }
        report.checks.push_back({"gap_kernel_monotone", ok, detail});
    }

    return report;
}

} // namespace bathsim
