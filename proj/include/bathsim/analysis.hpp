// analysis.hpp - final-dynamics diagnostics over recorded trajectories.
//
// The asymptotic statements (decay, synchronization at an eigenfrequency,
// convergence to a critical point) are operationalised with end-anchored
// sliding windows: peak persistence stands in for a sharp spectral line, and
// all thresholds are relative so the rules are scale-free.

#pragma once

#include "bathsim/dynamics.hpp"
#include "bathsim/spectrum.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace bathsim {

struct SpectralPeak {
    double frequency{0.0};   // rad/time, >= 0
    double amplitude{0.0};   // tone amplitude after window-gain correction
    double persistence{0.0}; // fraction of late windows containing this peak
};

struct WindowPeaks {
    double t_start{0.0};
    std::vector<SpectralPeak> peaks;  // strongest first
};

struct WindowedPeaksResult {
    std::vector<WindowPeaks> windows;      // earliest to latest, end-anchored grid
    std::vector<SpectralPeak> persistent;  // final-window peaks with persistence filled
    double bin_width{0.0};                 // 2*pi / window length
};

// Hann-windowed DFT magnitude per window with quadratic peak interpolation.
// Windows are anchored at the end of the series; `window` and `hop` are in
// time units of the sampling grid.
WindowedPeaksResult windowed_peaks(const std::vector<double>& series, double sample_dt,
                                   double window, double hop,
                                   double rel_threshold = 0.05);

struct HarmonicFit {
    std::complex<double> alpha{0.0, 0.0};  // psi ~ alpha e^{i lambda t} + conj
    double lambda{0.0};
    double residual_fraction{0.0};         // RMS(residual) / RMS(window)
};

// Least-squares single-tone fit over series[begin..end) with the frequency
// refined near lambda_guess (within +-refine_halfwidth).
HarmonicFit fit_harmonic(const std::vector<double>& series, double sample_dt, double t_begin,
                         std::size_t begin, std::size_t end, double lambda_guess,
                         double refine_halfwidth);

// Relative defect of the bath-energy identity
//   E_bath(t) = sum_j w_j | a_j Psi_j(t) + (etadot0_j + i nu_j eta0_j) |^2,
// with Psi_j the cumulative transform int_0^t e^{-i nu_j s} psi(s) ds built
// from the dense psi history.  One value per checkpoint time.
std::vector<double> energy_identity_residual(const TrajectoryRecord& record,
                                             const DiscreteBath& bath,
                                             const BathInitialData& init,
                                             const std::vector<double>& checkpoints);

enum class Regime { Decay, Harmonic, Converged, Unresolved };

const char* regime_name(Regime r);

struct AnalysisOptions {
    double window{50.0};
    double hop{25.0};
    double peak_rel_threshold{0.05};
    double persistence_min{0.9};
    double decay_ratio_max{0.05};     // late max / early max
    double amp_variation_max{0.05};   // across the last three windows
    double fit_residual_max{0.05};
    double converge_std_max{0.05};    // late-window std / scale
    double converge_grad_max{0.05};   // |V0'(xbar) - K xbar| / scale
};

struct ClassificationReport {
    Regime predicted{Regime::Unresolved};
    Regime measured{Regime::Unresolved};
    std::optional<double> lambda_predicted;
    std::optional<double> lambda_measured;
    std::complex<double> alpha{0.0, 0.0};
    std::optional<double> x_infinity;
    std::optional<double> matched_critical_point;
    std::vector<double> critical_points;

    // diagnostics behind the decision
    double decay_ratio{0.0};
    double amp_variation{0.0};
    double fit_residual{0.0};
    double late_std{0.0};
    double scale{0.0};
    double persistence{0.0};
    std::string notes;
    AnalysisOptions options_used;
};

// Compare the spectrum-side prediction with the measured late-time regime of
// the recorded trajectory.
ClassificationReport classify(const TrajectoryRecord& record, const BathSpectrum& spec,
                              const OscillatorModel& osc, double K,
                              const QuadratureSpec& quad, const AnalysisOptions& options = {});

} // namespace bathsim
