#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bathsim/errors.hpp"
#include "bathsim/reduced.hpp"
#include "oracle.hpp"

#include <cmath>
#include <sstream>

using namespace bathsim;

namespace {

QuadratureSpec quad_for(int n_modes)
{
    QuadratureSpec q;
    q.nu_max = 8.0;
    q.panels = std::max(1, n_modes / 32);
    return q;
}

OscillatorModel harmonic(double v)
{
    OscillatorModel osc;
    osc.V0 = Polynomial({0.0, 0.0, 0.5 * v});
    return osc;
}

const BathSpectrum kGapless = BathSpectrum::gaussian_gapless();
const BathSpectrum kGap = BathSpectrum::gaussian_gap(1.0, 1.0, 1.0);

MemoryKernel zero_kernel(double dt, double duration)
{
    MemoryKernel k;
    k.dt = dt;
    k.samples.assign(static_cast<std::size_t>(std::llround(duration / dt)) + 1, 0.0);
    return k;
}

} // namespace

TEST_CASE("kernel tabulation: continuum source matches the analytic form")
{
    auto kernel = build_kernel(kGapless, quad_for(0), 0.05, 20.0);
    REQUIRE(kernel.samples.size() == 401);
    CHECK(kernel.samples[0] == 0.0);
    for (std::size_t k = 0; k < kernel.samples.size(); ++k) {
        const double tau = 0.05 * static_cast<double>(k);
        CHECK(std::abs(kernel.samples[k] - 0.5 * tau * std::exp(-tau * tau / 4.0)) < 1e-8);
    }
}

TEST_CASE("kernel tabulation: discrete sum approaches the continuum kernel")
{
    auto cont = build_kernel(kGap, quad_for(0), 0.05, 40.0);
    auto bath = sample_modes(kGap, quad_for(2048), 2048);
    auto disc = build_kernel(bath, 0.05, 40.0);
    REQUIRE(cont.samples.size() == disc.samples.size());
    double gap = 0.0;
    for (std::size_t k = 0; k < cont.samples.size(); ++k)
        gap = std::max(gap, std::abs(cont.samples[k] - disc.samples[k]));
    CHECK(gap < 1e-4);
}

TEST_CASE("kernel tabulation: discrete sum equals a direct trigonometric sum")
{
    auto bath = sample_modes(kGap, quad_for(64), 64);
    auto kernel = build_kernel(bath, 0.1, 5.0);
    for (std::size_t k = 0; k < kernel.samples.size(); k += 7) {
        const double tau = 0.1 * static_cast<double>(k);
        double direct = 0.0;
        for (std::size_t j = 0; j < bath.size(); ++j)
            direct += bath.weights[j] * bath.couplings[j] * bath.couplings[j] *
                      std::sin(bath.nodes[j] * tau) / bath.nodes[j];
        CHECK(kernel.samples[k] == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("fluctuating force: zero data, one-term sum, resummation")
{
    auto bath = sample_modes(kGap, quad_for(64), 64);
    auto zero = bath_initial(bath, BathInitKind::Zero);
    FluctuatingForce f0(bath, zero);
    CHECK(f0.is_zero());
    CHECK(f0(0.7) == 0.0);
    CHECK(f0.amplitude_bound() == 0.0);

    // single mode: F0(t) = w a eta0 cos(nu t)
    DiscreteBath one;
    one.nodes = {2.0};
    one.weights = {1.0};
    one.couplings = {1.0};
    BathInitialData data;
    data.eta0 = {1.0};
    data.etadot0 = {0.0};
    FluctuatingForce tone(one, data);
    for (double t : {0.0, 0.3, 1.9})
        CHECK(tone(t) == doctest::Approx(std::cos(2.0 * t)).epsilon(1e-15));

    // thermal data at t = 0 against a direct sum, and the amplitude bound
    auto thermal = bath_initial(bath, BathInitKind::Thermal, 17, 0.4);
    FluctuatingForce force(bath, thermal);
    double direct = 0.0, bound = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j) {
        direct += bath.weights[j] * bath.couplings[j] * thermal.eta0[j];
        const double cc = bath.weights[j] * bath.couplings[j] * thermal.eta0[j];
        const double cs = bath.weights[j] * bath.couplings[j] * thermal.etadot0[j] / bath.nodes[j];
        bound += std::sqrt(cc * cc + cs * cs);
    }
    CHECK(force(0.0) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(force.amplitude_bound() == doctest::Approx(bound).epsilon(1e-12));
    for (double t : {0.0, 1.0, 13.7, 200.0})
        CHECK(std::abs(force(t)) <= force.amplitude_bound() * (1.0 + 1e-12));
}

TEST_CASE("reduced equation: bare oscillator to second order")
{
    GleOptions opt;
    opt.dt = 1e-3;
    opt.duration = 10.0;
    opt.sample_stride = 10;
    auto rec = gle_run(harmonic(1.0), zero_kernel(1e-3, 10.0), FluctuatingForce{}, 1.0, 0.0, opt);
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        worst = std::max(worst, std::abs(rec.x[i] - std::cos(rec.times[i])));
    CHECK(worst < 5e-6);

    // energy of the bare oscillator conserved to O(dt^2)
    double drift = 0.0;
    for (double e : rec.e_total) drift = std::max(drift, std::abs(e - rec.e_total.front()));
    CHECK(drift < 1e-6);
}

TEST_CASE("reduced equation: order-2 convergence against the reference integrator")
{
    auto bath = sample_modes(kGap, quad_for(16), 16);
    auto data = bath_initial(bath, BathInitKind::Zero);
    auto osc = harmonic(2.0);
    auto ref = oracle_run(bath, osc, make_state(1.0, 0.0, data), 1e-12, 1e-12, 10.0, 0.05);

    auto gap_for = [&](double dt) {
        auto kernel = build_kernel(bath, dt, 10.0);
        GleOptions opt;
        opt.dt = dt;
        opt.duration = 10.0;
        opt.sample_stride = static_cast<int>(std::llround(0.05 / dt));
        auto rec = gle_run(osc, kernel, FluctuatingForce{}, 1.0, 0.0, opt);
        double gap = 0.0;
        for (std::size_t i = 0; i < rec.times.size(); ++i)
            gap = std::max(gap, std::abs(rec.x[i] - ref.x[i]));
        return gap;
    };
    const double g1 = gap_for(2e-3);
    const double g2 = gap_for(1e-3);
    CHECK(g1 / g2 > 3.0);
    CHECK(g1 / g2 < 5.0);
}

TEST_CASE("reduced equation: matches the full system with matching forcing")
{
    auto bath = sample_modes(kGap, quad_for(128), 128);
    auto data = bath_initial(bath, BathInitKind::Thermal, 23, 0.3);
    auto osc = harmonic(2.0);

    RunOptions fopt;
    fopt.dt = 1e-3;
    fopt.duration = 10.0;
    fopt.sample_stride = 10;
    auto full = run(bath, osc, make_state(1.0, 0.0, data), fopt);

    auto kernel = build_kernel(bath, 1e-3, 10.0);
    FluctuatingForce force(bath, data);
    GleOptions gopt;
    gopt.dt = 1e-3;
    gopt.duration = 10.0;
    gopt.sample_stride = 10;
    auto gle = gle_run(osc, kernel, force, 1.0, 0.0, gopt);

    double gap = 0.0;
    for (std::size_t i = 0; i < full.x.size(); ++i)
        gap = std::max(gap, std::abs(full.x[i] - gle.x[i]));
    CHECK(gap < 1e-6);
}

TEST_CASE("reduced equation: contract errors")
{
    auto kernel = zero_kernel(1e-3, 1.0);
    GleOptions opt;
    opt.dt = 2e-3;  // mismatched step
    opt.duration = 1.0;
    CHECK_THROWS_AS(gle_run(harmonic(1.0), kernel, FluctuatingForce{}, 1.0, 0.0, opt),
                    InvalidArgument);
    opt.dt = 1e-3;
    opt.duration = 2.0;  // kernel too short
    CHECK_THROWS_AS(gle_run(harmonic(1.0), kernel, FluctuatingForce{}, 1.0, 0.0, opt),
                    InvalidArgument);
}

TEST_CASE("kernel csv")
{
    auto bath = sample_modes(kGap, quad_for(16), 16);
    auto kernel = build_kernel(bath, 0.5, 2.0);
    std::stringstream out;
    write_kernel_csv(out, kernel);
    std::string line;
    std::getline(out, line);
    CHECK(line == "tau,w");
    int rows = 0;
    while (std::getline(out, line)) ++rows;
    CHECK(rows == 5);
}
