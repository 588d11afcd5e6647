#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bathsim/discretize.hpp"
#include "bathsim/errors.hpp"
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

const BathSpectrum kGapless = BathSpectrum::gaussian_gapless();
const BathSpectrum kGapSqrt = BathSpectrum::gaussian_gap(1.0, 1.0, 0.5);

} // namespace

TEST_CASE("sample_modes: structure and couplings")
{
    auto bath = sample_modes(kGapless, quad_for(128), 128);
    REQUIRE(bath.size() == 128);
    for (std::size_t j = 1; j < bath.size(); ++j) CHECK(bath.nodes[j] > bath.nodes[j - 1]);
    for (std::size_t j = 0; j < bath.size(); ++j) {
        CHECK(bath.nodes[j] > 0.0);
        CHECK(bath.nodes[j] < 8.0);
        CHECK(bath.weights[j] > 0.0);
        CHECK(bath.couplings[j] == a_hat(kGapless, bath.nodes[j]));
    }

    auto none = sample_modes(BathSpectrum::gaussian_gapless(0.0), quad_for(16), 16);
    for (double a : none.couplings) CHECK(a == 0.0);

    CHECK_THROWS_AS(sample_modes(kGapless, quad_for(2), 1), InvalidArgument);
    QuadratureSpec bad = quad_for(16);
    bad.nu_max = 0.0;
    CHECK_THROWS_AS(sample_modes(kGapless, bad, 16), InvalidArgument);
}

TEST_CASE("discrete dissipation constant converges to the continuum value")
{
    // N = 512 reproduces K = 1 to quadrature accuracy.
    auto bath = sample_modes(kGapless, quad_for(512), 512);
    CHECK(std::abs(discrete_dissipation_constant(bath) - 1.0) < 1e-8);

    // refinement shrinks the error on the sqrt-edge fixture
    const double K = 0.11669469295458346;  // Simpson oracle value
    double prev = 1.0;
    for (int n : {256, 512, 1024, 2048}) {
        auto b = sample_modes(kGapSqrt, quad_for(n), n);
        const double err = std::abs(discrete_dissipation_constant(b) - K);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("recurrence time")
{
    DiscreteBath uniform;
    for (int j = 0; j < 16; ++j) {
        uniform.nodes.push_back(1.0 + 0.25 * j);
        uniform.weights.push_back(1.0);
        uniform.couplings.push_back(0.0);
    }
    CHECK(recurrence_time(uniform) == doctest::Approx(2.0 * M_PI / 0.25).epsilon(1e-15));

    DiscreteBath two;
    two.nodes = {1.0, 1.5};
    two.weights = {1.0, 1.0};
    two.couplings = {0.0, 0.0};
    CHECK(recurrence_time(two) == doctest::Approx(4.0 * M_PI).epsilon(1e-15));

    // Gauss nodes cluster at panel edges, so the horizon beats the uniform bound.
    auto bath = sample_modes(kGapless, quad_for(512), 512);
    const double uniform_bound = 2.0 * M_PI / (8.0 / 511.0);
    CHECK(recurrence_time(bath) >= uniform_bound);

    // and grows at least linearly with N at fixed band
    double prev = 0.0;
    for (int n : {128, 256, 512, 1024}) {
        auto b = sample_modes(kGapless, quad_for(n), n);
        const double t = recurrence_time(b);
        if (prev > 0.0) CHECK(t >= 1.9 * prev);
        prev = t;
    }
}

TEST_CASE("discrete eigenfrequency: decoupled bath")
{
    DiscreteBath bath;
    for (int j = 0; j < 8; ++j) {
        bath.nodes.push_back(2.0 + 0.5 * j);
        bath.weights.push_back(1.0);
        bath.couplings.push_back(0.0);
    }
    // S(lambda) = v - lambda^2
    auto root = discrete_eigenfrequency(bath, 2.0, 1e-12);
    REQUIRE(root.has_value());
    CHECK(*root == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));

    CHECK_FALSE(discrete_eigenfrequency(bath, 5.0, 1e-12).has_value());  // sqrt(5) > min nu
}

TEST_CASE("discrete eigenfrequency: converges to the continuum root")
{
    QuadratureSpec cq;
    cq.nu_max = 8.0;
    const auto lam_cont = find_eigenfrequency(kGapSqrt, 0.8, cq, 1e-12);
    REQUIRE(lam_cont.has_value());

    double prev = 1.0;
    for (int n : {256, 512, 1024, 2048}) {
        auto bath = sample_modes(kGapSqrt, quad_for(n), n);
        const auto lam = discrete_eigenfrequency(bath, 0.8, 1e-12);
        REQUIRE(lam.has_value());
        const double err = std::abs(*lam - *lam_cont);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-4);  // N = 2048 agreement

    auto bath = sample_modes(kGapSqrt, quad_for(256), 256);
    CHECK_THROWS_AS(discrete_eigenfrequency(bath, 0.05, 1e-12), InvalidArgument);
}

TEST_CASE("bath initial data: zero kind")
{
    auto bath = sample_modes(kGapless, quad_for(64), 64);
    auto data = bath_initial(bath, BathInitKind::Zero);
    CHECK(data.all_zero());
    CHECK(data.energy == 0.0);
}

TEST_CASE("bath initial data: thermal determinism and expected energy")
{
    auto bath = sample_modes(kGapless, quad_for(256), 256);
    auto a = bath_initial(bath, BathInitKind::Thermal, 1234, 0.7, 1.0);
    auto b = bath_initial(bath, BathInitKind::Thermal, 1234, 0.7, 1.0);
    CHECK(a.eta0 == b.eta0);
    CHECK(a.etadot0 == b.etadot0);

    auto c = bath_initial(bath, BathInitKind::Thermal, 99, 0.7, 1.0);
    CHECK(a.eta0 != c.eta0);

    double mean = 0.0, sd = 0.0;
    thermal_energy_stats(bath, 0.7, 1.0, mean, sd);
    CHECK(std::abs(a.energy - mean) <= 3.0 * sd);

    // recorded energy matches an independent resummation
    double direct = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j)
        direct += bath.weights[j] * (a.etadot0[j] * a.etadot0[j] +
                                     bath.nodes[j] * bath.nodes[j] * a.eta0[j] * a.eta0[j]);
    CHECK(a.energy == doctest::Approx(direct).epsilon(1e-14));

    CHECK_THROWS_AS(bath_initial(bath, BathInitKind::Thermal, 1, 0.0), InvalidArgument);
}

TEST_CASE("bath csv round trip")
{
    auto bath = sample_modes(kGapSqrt, quad_for(32), 32);
    std::stringstream buffer;
    write_bath_csv(buffer, bath);
    auto copy = read_bath_csv(buffer);
    REQUIRE(copy.size() == bath.size());
    for (std::size_t j = 0; j < bath.size(); ++j) {
        CHECK(copy.nodes[j] == bath.nodes[j]);
        CHECK(copy.weights[j] == bath.weights[j]);
        CHECK(copy.couplings[j] == bath.couplings[j]);
    }
}
