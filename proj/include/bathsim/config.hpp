// config.hpp - experiment configuration: one JSON document drives the whole
// spectrum -> discretize -> dynamics/reduced -> analysis pipeline.

#pragma once

#include "bathsim/analysis.hpp"
#include "bathsim/discretize.hpp"
#include "bathsim/dynamics.hpp"
#include "bathsim/quadrature.hpp"
#include "bathsim/spectrum.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bathsim {

enum class Engine { Full, Gle, Both };

struct SpectrumConfig {
    std::string family{"gaussian_gapless"};  // gaussian_gapless | gaussian_gap | tabulated | klein_gordon
    double nu0{0.0};
    double amplitude{0.5641895835477563};  // 1/sqrt(pi): unit dissipation constant
    double edge{1.0};
    std::string table_path;

    // klein_gordon: rho0(s) = rho0_amplitude |s|^rho0_power e^{-s^2},
    //               kappa(nu) = kappa_amplitude (nu^2-m0^2)^kappa_power e^{-kappa_decay nu^2}
    double rho0_amplitude{1.0};
    double rho0_power{1.0};
    double kappa_amplitude{1.0};
    double kappa_power{1.0};
    double kappa_decay{1.0};
};

struct DiscretizationConfig {
    int n_modes{512};
    std::string rule{"adaptive"};  // adaptive | composite_gl
    int panels{16};
    int points_per_panel{16};
    int max_subdivisions{4000};
    double nu_max{8.0};
    double abs_tol{1e-12};
    double rel_tol{1e-10};
};

struct IntegrationConfig {
    double dt{1e-3};
    double duration{10.0};
    int sample_stride{10};
    Engine engine{Engine::Full};
    std::string kernel_source{"discrete"};  // discrete | continuum (reduced runs)
    bool override_recurrence_guard{false};
    double recurrence_safety{0.5};
};

struct InitialConfig {
    double x0{1.0};
    double p0{0.0};
    std::string bath_kind{"zero"};  // zero | thermal
    double temperature{0.0};
    double envelope_scale{1.0};
    std::uint64_t seed{1};
};

struct OutputConfig {
    std::string directory{"out"};
    bool write_trajectory{true};
    bool write_kernel{false};
    bool write_bath{false};
    bool write_gap_table{true};
    bool write_windows{false};
};

struct SweepConfig {
    std::string parameter{"v"};  // v | c
    std::vector<double> values;
    int workers{1};
};

struct ExperimentConfig {
    SpectrumConfig spectrum;
    std::vector<double> V0_coeffs{0.0, 0.0, 1.0};  // V0 = x^2 (v = 2)
    std::vector<double> f_coeffs{0.0, 1.0};
    DiscretizationConfig discretization;
    IntegrationConfig integration;
    InitialConfig initial;
    AnalysisOptions analysis;
    OutputConfig output;
    SweepConfig sweep;

    std::string base_dir;  // directory of the config file, for relative paths
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
std::string canonical_json(const ExperimentConfig& config);

// FNV-1a hash of the canonical form, as fixed-width hex.  Every artifact the
// CLI writes carries this value.
std::string config_hash(const ExperimentConfig& config);

// Builders for the pipeline stages.
BathSpectrum build_spectrum(const ExperimentConfig& config);
OscillatorModel build_oscillator(const ExperimentConfig& config);
QuadratureSpec build_quadrature(const ExperimentConfig& config);
BathInitKind bath_kind(const ExperimentConfig& config);

// Seed after the BATHSIM_SEED environment override.
std::uint64_t effective_seed(const ExperimentConfig& config);

// --- file formats -----------------------------------------------------------

std::string format_g17(double v);

// schema: "# bathsim trajectory v1 config=<hash>" then t,x,p,psi,phi,E_total,E_bath
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record,
                          const std::string& hash);

// two-column (nu, a_hat) table, strictly increasing nu >= 0
std::vector<TablePoint> read_table_csv(std::istream& in);

} // namespace bathsim
