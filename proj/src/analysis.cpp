#include "bathsim/analysis.hpp"
#include "bathsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace bathsim {

namespace {

// In-place iterative radix-2 FFT; n must be a power of two.
void fft(std::vector<std::complex<double>>& a)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<SpectralPeak> extract_peaks(const std::vector<double>& samples, double sample_dt,
                                        double rel_threshold)
{
    const std::size_t w = samples.size();
    const std::size_t nfft = next_pow2(w);
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                        static_cast<double>(w);

    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    double gain = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
        const double hann =
            0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(w - 1)));
        buf[k] = (samples[k] - mean) * hann;
        gain += hann;
    }
    fft(buf);

    std::vector<double> mag(nfft / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);

    double peak_mag = 0.0;
    for (std::size_t k = 1; k + 1 < mag.size(); ++k) peak_mag = std::max(peak_mag, mag[k]);
    const double threshold = rel_threshold * peak_mag;
    const double dnu = 2.0 * M_PI / (static_cast<double>(nfft) * sample_dt);

    std::vector<SpectralPeak> peaks;
    for (std::size_t k = 2; k + 2 < mag.size(); ++k) {
        if (mag[k] <= threshold) continue;
        if (!(mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])) continue;
        // Quadratic interpolation around the bin maximum.
        const double denom = mag[k - 1] - 2.0 * mag[k] + mag[k + 1];
        double delta = 0.0;
        if (denom < 0.0) delta = 0.5 * (mag[k - 1] - mag[k + 1]) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
        SpectralPeak p;
        p.frequency = (static_cast<double>(k) + delta) * dnu;
        p.amplitude = 2.0 * (mag[k] - 0.25 * (mag[k - 1] - mag[k + 1]) * delta) / gain;
        peaks.push_back(p);
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const SpectralPeak& a, const SpectralPeak& b) { return a.amplitude > b.amplitude; });
    if (peaks.size() > 8) peaks.resize(8);
    return peaks;
}

} // namespace

WindowedPeaksResult windowed_peaks(const std::vector<double>& series, double sample_dt,
                                   double window, double hop, double rel_threshold)
{
    if (!(sample_dt > 0.0)) throw InvalidArgument("windowed_peaks: sample_dt must be positive");
    if (!(window > 0.0) || !(hop > 0.0))
        throw InvalidArgument("windowed_peaks: window and hop must be positive");
    const auto w = static_cast<std::size_t>(std::llround(window / sample_dt));
    const auto h = static_cast<std::size_t>(std::llround(hop / sample_dt));
    if (w < 8 || h < 1) throw InvalidArgument("windowed_peaks: window too short for the sampling");
    if (w > series.size()) throw InvalidArgument("windowed_peaks: window exceeds series length");

    const std::size_t n_windows = (series.size() - w) / h + 1;

    WindowedPeaksResult result;
    result.bin_width = 2.0 * M_PI / window;
    result.windows.reserve(n_windows);

    // End-anchored grid: the last window always covers the series tail.
    for (std::size_t m = 0; m < n_windows; ++m) {
        const std::size_t start = series.size() - w - (n_windows - 1 - m) * h;
        std::vector<double> chunk(series.begin() + static_cast<std::ptrdiff_t>(start),
                                  series.begin() + static_cast<std::ptrdiff_t>(start + w));
        WindowPeaks wp;
        wp.t_start = static_cast<double>(start) * sample_dt;
        wp.peaks = extract_peaks(chunk, sample_dt, rel_threshold);
        result.windows.push_back(std::move(wp));
    }

    // Persistence of each final-window peak across the late half.
    const std::size_t late_begin = n_windows / 2;
    const std::size_t late_count = n_windows - late_begin;
    for (const SpectralPeak& p : result.windows.back().peaks) {
        std::size_t hits = 0;
        for (std::size_t m = late_begin; m < n_windows; ++m) {
            for (const SpectralPeak& q : result.windows[m].peaks) {
                if (std::abs(q.frequency - p.frequency) <= result.bin_width) {
                    ++hits;
                    break;
                }
            }
        }
        SpectralPeak marked = p;
        marked.persistence = static_cast<double>(hits) / static_cast<double>(late_count);
        result.persistent.push_back(marked);
    }
    return result;
}

HarmonicFit fit_harmonic(const std::vector<double>& series, double sample_dt, double t_begin,
                         std::size_t begin, std::size_t end, double lambda_guess,
                         double refine_halfwidth)
{
    if (end > series.size() || begin >= end)
        throw InvalidArgument("fit_harmonic: window outside the series");
    const std::size_t n = end - begin;

    double rms2 = 0.0;
    for (std::size_t k = begin; k < end; ++k) rms2 += series[k] * series[k];
    rms2 /= static_cast<double>(n);
    if (rms2 == 0.0) return HarmonicFit{{0.0, 0.0}, lambda_guess, 0.0};

    // Least squares for a cos(lambda t) + b sin(lambda t) at fixed lambda;
    // returns the squared residual.
    auto solve = [&](double lambda, double& a, double& b) {
        double scc = 0.0, sss = 0.0, scs = 0.0, scy = 0.0, ssy = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            const double t = t_begin + static_cast<double>(k - begin) * sample_dt;
            const double cv = std::cos(lambda * t);
            const double sv = std::sin(lambda * t);
            const double y = series[k];
            scc += cv * cv;
            sss += sv * sv;
            scs += cv * sv;
            scy += cv * y;
            ssy += sv * y;
        }
        const double det = scc * sss - scs * scs;
        if (std::abs(det) < 1e-300) {
            a = b = 0.0;
            return rms2;
        }
        a = (scy * sss - ssy * scs) / det;
        b = (ssy * scc - scy * scs) / det;
        double res = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            const double t = t_begin + static_cast<double>(k - begin) * sample_dt;
            const double d = series[k] - a * std::cos(lambda * t) - b * std::sin(lambda * t);
            res += d * d;
        }
        return res / static_cast<double>(n);
    };

    double a = 0.0, b = 0.0;
    double lo = std::max(0.0, lambda_guess - refine_halfwidth);
    double hi = lambda_guess + refine_halfwidth;
    // Golden-section refinement of the residual over lambda.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = hi - gr * (hi - lo);
    double m2 = lo + gr * (hi - lo);
    double f1 = solve(m1, a, b);
    double f2 = solve(m2, a, b);
    for (int iter = 0; iter < 60 && (hi - lo) > 1e-9 * std::max(1.0, lambda_guess); ++iter) {
        if (f1 < f2) {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - gr * (hi - lo);
            f1 = solve(m1, a, b);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + gr * (hi - lo);
            f2 = solve(m2, a, b);
        }
    }
    const double lambda = 0.5 * (lo + hi);
    const double res2 = solve(lambda, a, b);

    HarmonicFit fit;
    fit.lambda = lambda;
    fit.alpha = std::complex<double>(0.5 * a, -0.5 * b);
    fit.residual_fraction = std::sqrt(res2 / rms2);
    return fit;
}

std::vector<double> energy_identity_residual(const TrajectoryRecord& record,
                                             const DiscreteBath& bath,
                                             const BathInitialData& init,
                                             const std::vector<double>& checkpoints)
{
    if (record.psi_dense.empty())
        throw InvalidArgument("energy_identity_residual: record lacks dense psi samples");
    if (init.eta0.size() != bath.size())
        throw InvalidArgument("energy_identity_residual: initial data does not match bath");

    const double dt = record.dt;
    const std::size_t n_steps = record.psi_dense.size() - 1;

    // Map checkpoints onto step indices and recorded samples.
    struct Point {
        std::size_t step;
        std::size_t sample;
    };
    std::vector<Point> points;
    for (double tc : checkpoints) {
        auto step = static_cast<std::size_t>(std::llround(tc / dt));
        if (step > n_steps)
            throw InvalidArgument("energy_identity_residual: checkpoint beyond the record");
        std::size_t best = 0;
        double dist = std::abs(record.times[0] - tc);
        for (std::size_t i = 1; i < record.times.size(); ++i) {
            const double d = std::abs(record.times[i] - tc);
            if (d < dist) {
                dist = d;
                best = i;
            }
        }
        step = static_cast<std::size_t>(std::llround(record.times[best] / dt));
        points.push_back({step, best});
    }

    std::vector<double> identity(points.size(), 0.0);
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double nu = bath.nodes[j];
        const double a = bath.couplings[j];
        const std::complex<double> eta_bullet = init.mode_amplitude(j, nu);

        const std::complex<double> rot = std::polar(1.0, -nu * dt);
        std::complex<double> phase(1.0, 0.0);
        std::complex<double> accum(0.0, 0.0);
        for (std::size_t k = 0; k <= n_steps; ++k) {
            for (std::size_t c = 0; c < points.size(); ++c) {
                if (points[c].step == k) {
                    const double m = std::abs(a * accum + eta_bullet);
                    identity[c] += bath.weights[j] * m * m;
                }
            }
            if (k == n_steps) break;
            const std::complex<double> next_phase =
                (k + 1) % 4096 == 0 ? std::polar(1.0, -nu * dt * static_cast<double>(k + 1))
                                    : phase * rot;
            accum += 0.5 * dt * (phase * record.psi_dense[k] + next_phase * record.psi_dense[k + 1]);
            phase = next_phase;
        }
    }

    std::vector<double> residuals(points.size(), 0.0);
    for (std::size_t c = 0; c < points.size(); ++c) {
        const double sim = record.e_bath[points[c].sample];
        residuals[c] = std::abs(sim - identity[c]) / std::max(sim, 1e-300);
    }
    return residuals;
}

const char* regime_name(Regime r)
{
    switch (r) {
        case Regime::Decay: return "Decay";
        case Regime::Harmonic: return "Harmonic";
        case Regime::Converged: return "Converged";
        case Regime::Unresolved: return "Unresolved";
    }
    return "Unresolved";
}

ClassificationReport classify(const TrajectoryRecord& record, const BathSpectrum& spec,
                              const OscillatorModel& osc, double K,
                              const QuadratureSpec& quad, const AnalysisOptions& options)
{
    ClassificationReport rep;
    rep.options_used = options;

    // Prediction from the spectrum side.
    if (osc.is_linear_case()) {
        try {
            const auto root = find_eigenfrequency(spec, osc.stiffness(), quad);
            if (root) {
                rep.predicted = Regime::Harmonic;
                rep.lambda_predicted = *root;
            } else {
                rep.predicted = Regime::Decay;
            }
        } catch (const Error& e) {
            rep.predicted = Regime::Unresolved;
            rep.notes += std::string("prediction failed: ") + e.what() + "; ";
        }
    } else if (spec.nu0 == 0.0) {
        rep.predicted = Regime::Converged;
        rep.critical_points = effective_critical_points(osc, K);
    } else {
        rep.predicted = Regime::Unresolved;
        rep.notes += "no prediction rule for a gapped nonlinear configuration; ";
    }

    // Measurement side, all rules anchored at the end of the record.
    const std::vector<double>& x = record.x;
    if (record.times.size() < 2) throw InvalidArgument("classify: record too short");
    const double sample_dt = record.times[1] - record.times[0];

    WindowedPeaksResult wp =
        windowed_peaks(x, sample_dt, options.window, options.hop, options.peak_rel_threshold);
    const auto w_len = static_cast<std::size_t>(std::llround(options.window / sample_dt));

    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    rep.scale = scale;
    if (scale == 0.0) {
        rep.measured = Regime::Converged;
        rep.x_infinity = 0.0;
        rep.notes += "trajectory identically zero; ";
        return rep;
    }

    const std::size_t first_start = x.size() - w_len -
                                    (wp.windows.size() - 1) *
                                        static_cast<std::size_t>(std::llround(options.hop / sample_dt));
    double early_max = 0.0, late_max = 0.0;
    for (std::size_t k = first_start; k < first_start + w_len; ++k)
        early_max = std::max(early_max, std::abs(x[k]));
    for (std::size_t k = x.size() - w_len; k < x.size(); ++k)
        late_max = std::max(late_max, std::abs(x[k]));
    rep.decay_ratio = early_max > 0.0 ? late_max / early_max : 0.0;

    if (rep.decay_ratio <= options.decay_ratio_max) {
        rep.measured = Regime::Decay;
        return rep;
    }

    // Harmonic: persistent peak with stable amplitude and a clean tone fit.
    const SpectralPeak* best = nullptr;
    for (const SpectralPeak& p : wp.persistent) {
        if (p.persistence >= options.persistence_min && (!best || p.amplitude > best->amplitude))
            best = &p;
    }
    if (best && wp.windows.size() >= 3) {
        rep.persistence = best->persistence;
        // Amplitude of the matched peak across the last three windows.
        double amin = 0.0, amax = 0.0, asum = 0.0;
        bool found_all = true;
        for (std::size_t m = wp.windows.size() - 3; m < wp.windows.size(); ++m) {
            double amp = -1.0;
            for (const SpectralPeak& q : wp.windows[m].peaks) {
                if (std::abs(q.frequency - best->frequency) <= wp.bin_width) {
                    amp = q.amplitude;
                    break;
                }
            }
            if (amp < 0.0) {
                found_all = false;
                break;
            }
            if (asum == 0.0) {
                amin = amax = amp;
            } else {
                amin = std::min(amin, amp);
                amax = std::max(amax, amp);
            }
            asum += amp;
        }
        if (found_all) {
            rep.amp_variation = (amax - amin) / (asum / 3.0);
            const std::size_t begin = x.size() - w_len;
            HarmonicFit fit = fit_harmonic(x, sample_dt, record.times[begin], begin, x.size(),
                                           best->frequency, wp.bin_width);
            rep.fit_residual = fit.residual_fraction;
            if (rep.amp_variation <= options.amp_variation_max &&
                fit.residual_fraction <= options.fit_residual_max) {
                rep.measured = Regime::Harmonic;
                rep.lambda_measured = fit.lambda;
                rep.alpha = fit.alpha;
                return rep;
            }
        }
    }

    // Converged: late window statistically flat at a critical point.
    {
        const std::size_t begin = x.size() - w_len;
        double mean = 0.0;
        for (std::size_t k = begin; k < x.size(); ++k) mean += x[k];
        mean /= static_cast<double>(w_len);
        double var = 0.0;
        for (std::size_t k = begin; k < x.size(); ++k) var += (x[k] - mean) * (x[k] - mean);
        var /= static_cast<double>(w_len);
        rep.late_std = std::sqrt(var);
        const double grad = std::abs(osc.V0.derivative()(mean) - K * mean);
        if (rep.late_std <= options.converge_std_max * scale &&
            grad <= options.converge_grad_max * scale) {
            rep.measured = Regime::Converged;
            rep.x_infinity = mean;
            if (osc.f_is_identity()) {
                rep.critical_points = effective_critical_points(osc, K);
                // Nearest critical point; ties broken toward smaller |x|.
                const double* nearest = nullptr;
                for (const double& c : rep.critical_points) {
                    if (!nearest || std::abs(c - mean) < std::abs(*nearest - mean) - 1e-15 ||
                        (std::abs(std::abs(c - mean) - std::abs(*nearest - mean)) <= 1e-15 &&
                         std::abs(c) < std::abs(*nearest)))
                        nearest = &c;
                }
                if (nearest) rep.matched_critical_point = *nearest;
            }
            return rep;
        }
    }

    rep.measured = Regime::Unresolved;
    return rep;
}

} // namespace bathsim
