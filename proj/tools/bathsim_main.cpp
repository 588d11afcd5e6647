// bathsim - config-driven pipeline: spectrum -> discretize -> dynamics or
// reduced equation -> analysis, with all artifacts written under --out.

#include "bathsim/analysis.hpp"
#include "bathsim/config.hpp"
#include "bathsim/discretize.hpp"
#include "bathsim/dynamics.hpp"
#include "bathsim/errors.hpp"
#include "bathsim/reduced.hpp"
#include "bathsim/spectrum.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using namespace bathsim;

struct Cli {
    std::string config_path;
    std::string out_override;
    int workers_override = 0;
    bool override_guard = false;
};

struct Pipeline {
    ExperimentConfig config;
    std::string hash;
    BathSpectrum spec;
    OscillatorModel osc;
    QuadratureSpec quad;
    fs::path out;
};

Pipeline make_pipeline(const Cli& cli)
{
    Pipeline p{load_config(cli.config_path), {}, {}, {}, {}, {}};
    if (!cli.out_override.empty()) p.config.output.directory = cli.out_override;
    if (cli.workers_override > 0) p.config.sweep.workers = cli.workers_override;
    if (cli.override_guard) p.config.integration.override_recurrence_guard = true;
    p.config.initial.seed = effective_seed(p.config);
    p.hash = config_hash(p.config);
    p.spec = build_spectrum(p.config);
    p.osc = build_oscillator(p.config);
    p.quad = build_quadrature(p.config);
    p.out = p.config.output.directory;
    fs::create_directories(p.out);
    return p;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

json monitors_json(const MonitorReport& m)
{
    return json{{"psi_bound", m.psi_bound},
                {"phi_bound", m.phi_bound},
                {"bath_energy_bound", m.bath_energy_bound},
                {"max_abs_psi", m.max_abs_psi},
                {"max_abs_phi", m.max_abs_phi},
                {"max_bath_energy", m.max_bath_energy},
                {"all_ok", m.all_ok()}};
}

double energy_drift(const TrajectoryRecord& rec)
{
    if (rec.e_total.empty()) return 0.0;
    const double e0 = rec.e_total.front();
    double drift = 0.0;
    for (double e : rec.e_total) drift = std::max(drift, std::abs(e - e0));
    return drift / std::max(std::abs(e0), 1.0);
}

struct FullRun {
    DiscreteBath bath;
    BathInitialData data;
    TrajectoryRecord record;
};

FullRun full_run(const Pipeline& p, bool dense_psi = false, bool bath_samples = false)
{
    FullRun r;
    r.bath = sample_modes(p.spec, p.quad, p.config.discretization.n_modes);
    r.data = bath_initial(r.bath, bath_kind(p.config), p.config.initial.seed,
                          p.config.initial.temperature, p.config.initial.envelope_scale);
    RunOptions opt;
    opt.dt = p.config.integration.dt;
    opt.duration = p.config.integration.duration;
    opt.sample_stride = p.config.integration.sample_stride;
    opt.store_dense_psi = dense_psi;
    opt.store_bath_samples = bath_samples;
    opt.override_recurrence_guard = p.config.integration.override_recurrence_guard;
    opt.recurrence_safety = p.config.integration.recurrence_safety;
    opt.seed = p.config.initial.seed;
    r.record = run(r.bath, p.osc, make_state(p.config.initial.x0, p.config.initial.p0, r.data), opt);
    return r;
}

MemoryKernel make_kernel(const Pipeline& p, const DiscreteBath& bath)
{
    if (p.config.integration.kernel_source == "continuum")
        return build_kernel(p.spec, p.quad, p.config.integration.dt, p.config.integration.duration);
    if (p.config.integration.kernel_source == "discrete")
        return build_kernel(bath, p.config.integration.dt, p.config.integration.duration);
    throw InvalidArgument("config: kernel_source must be 'discrete' or 'continuum'");
}

TrajectoryRecord gle_from(const Pipeline& p, const DiscreteBath& bath, const BathInitialData& data,
                          double duration, bool dense_psi = false)
{
    MemoryKernel kernel = p.config.integration.kernel_source == "continuum"
                              ? build_kernel(p.spec, p.quad, p.config.integration.dt, duration)
                              : build_kernel(bath, p.config.integration.dt, duration);
    FluctuatingForce force(bath, data);
    GleOptions opt;
    opt.dt = p.config.integration.dt;
    opt.duration = duration;
    opt.sample_stride = p.config.integration.sample_stride;
    opt.store_dense_psi = dense_psi;
    return gle_run(p.osc, kernel, force, p.config.initial.x0, p.config.initial.p0, opt);
}

json run_meta(const Pipeline& p, const DiscreteBath& bath, const TrajectoryRecord& rec,
              const char* engine)
{
    return json{{"config", p.hash},
                {"engine", engine},
                {"dt", rec.dt},
                {"T", rec.duration},
                {"sample_stride", rec.sample_stride},
                {"N", bath.size()},
                {"seed", p.config.initial.seed},
                {"recurrence_horizon", rec.recurrence_horizon},
                {"discrete_K", discrete_dissipation_constant(bath)},
                {"energy_drift", energy_drift(rec)},
                {"monitors", monitors_json(rec.monitors)}};
}

// --- spectrum ---------------------------------------------------------------

int cmd_spectrum(const Cli& cli)
{
    Pipeline p = make_pipeline(cli);
    json report;
    report["config"] = p.hash;

    try {
        const QuadResult K = dissipation_constant(p.spec, p.quad);
        report["K"] = {{"value", K.value}, {"error_estimate", K.error_estimate}};
    } catch (const Error& e) {
        report["K"] = {{"error", e.what()}};
    }
    report["truncation_mass_bound"] = truncation_mass_bound(p.spec, p.quad.nu_max);

    const HypothesisReport hyp = validate_hypotheses(p.spec, p.osc, p.quad);
    json checks = json::array();
    for (const auto& c : hyp.checks)
        checks.push_back({{"id", c.id}, {"passed", c.passed}, {"detail", c.detail}});
    report["hypotheses"] = checks;
    report["hypotheses_all_passed"] = hyp.all_passed();

    if (p.osc.is_linear_case()) {
        try {
            const auto root = find_eigenfrequency(p.spec, p.osc.stiffness(), p.quad);
            report["lambda0"] = root ? json(*root) : json(nullptr);
        } catch (const Error& e) {
            report["lambda0"] = {{"error", e.what()}};
        }
    }

    if (p.spec.nu0 > 0.0 && p.config.output.write_gap_table) {
        std::ofstream out(p.out / "gap_table.csv", std::ios::binary);
        out << "# bathsim gap table v1 config=" << p.hash << "\n";
        out << "nu,gap_kernel,phi\n";
        const double v = p.osc.stiffness();
        for (int k = 0; k <= 32; ++k) {
            const double nu = p.spec.nu0 * (1.0 - 2e-3) * k / 32.0;
            try {
                const GapValue g = gap_kernel(p.spec, nu, p.quad);
                out << format_g17(nu) << ',' << format_g17(g.value) << ','
                    << format_g17(-nu * nu + v - g.value) << '\n';
            } catch (const Error&) {
                break;
            }
        }
    }

    write_json(p.out / "spectrum_report.json", report);
    std::cout << report.dump(2) << std::endl;
    return hyp.all_passed() ? 0 : 1;
}

// --- simulate / gle ---------------------------------------------------------

int cmd_simulate(const Cli& cli)
{
    Pipeline p = make_pipeline(cli);
    FullRun r = full_run(p);

    if (p.config.output.write_trajectory) {
        std::ofstream out(p.out / "trajectory_full.csv", std::ios::binary);
        write_trajectory_csv(out, r.record, p.hash);
    }
    if (p.config.output.write_bath) {
        std::ofstream out(p.out / "bath.csv", std::ios::binary);
        write_bath_csv(out, r.bath);
    }
    json meta = run_meta(p, r.bath, r.record, "full");

    if (p.config.integration.engine == Engine::Both) {
        TrajectoryRecord gle = gle_from(p, r.bath, r.data, p.config.integration.duration);
        if (p.config.output.write_trajectory) {
            std::ofstream out(p.out / "trajectory_gle.csv", std::ios::binary);
            write_trajectory_csv(out, gle, p.hash);
        }
        double gap = 0.0;
        const std::size_t n = std::min(r.record.x.size(), gle.x.size());
        for (std::size_t i = 0; i < n; ++i)
            gap = std::max(gap, std::abs(r.record.x[i] - gle.x[i]));
        meta["full_vs_gle_gap"] = gap;
    }

    write_json(p.out / "run_meta.json", meta);
    std::cout << meta.dump(2) << std::endl;
    return r.record.monitors.all_ok() ? 0 : 1;
}

int cmd_gle(const Cli& cli)
{
    Pipeline p = make_pipeline(cli);
    DiscreteBath bath = sample_modes(p.spec, p.quad, p.config.discretization.n_modes);
    BathInitialData data = bath_initial(bath, bath_kind(p.config), p.config.initial.seed,
                                        p.config.initial.temperature, p.config.initial.envelope_scale);

    MemoryKernel kernel = make_kernel(p, bath);
    FluctuatingForce force(bath, data);
    GleOptions opt;
    opt.dt = p.config.integration.dt;
    opt.duration = p.config.integration.duration;
    opt.sample_stride = p.config.integration.sample_stride;
    TrajectoryRecord rec = gle_run(p.osc, kernel, force, p.config.initial.x0, p.config.initial.p0, opt);

    if (p.config.output.write_trajectory) {
        std::ofstream out(p.out / "trajectory_gle.csv", std::ios::binary);
        write_trajectory_csv(out, rec, p.hash);
    }
    if (p.config.output.write_kernel) {
        std::ofstream out(p.out / "kernel.csv", std::ios::binary);
        write_kernel_csv(out, kernel);
    }
    json meta{{"config", p.hash},
              {"engine", "gle"},
              {"dt", rec.dt},
              {"T", rec.duration},
              {"N", bath.size()},
              {"kernel_source", p.config.integration.kernel_source},
              {"kernel_truncation_error", kernel.truncation_error},
              {"F0_bound", force.amplitude_bound()}};
    write_json(p.out / "run_meta.json", meta);
    std::cout << meta.dump(2) << std::endl;
    return 0;
}

// --- verify -----------------------------------------------------------------

int cmd_verify(const Cli& cli)
{
    Pipeline p = make_pipeline(cli);
    json report;
    report["config"] = p.hash;
    int failures = 0;

    auto check = [&](const char* name, bool ok, double value, double bound) {
        std::cout << (ok ? "[ ok ] " : "[FAIL] ") << name << ": " << value
                  << " (bound " << bound << ")\n";
        report["checks"][name] = {{"ok", ok}, {"value", value}, {"bound", bound}};
        if (!ok) ++failures;
    };

    // Shared full run with dense psi: feeds the drift and identity checks.
    FullRun r = full_run(p, /*dense_psi=*/true);

    const double drift = energy_drift(r.record);
    check("energy_drift", drift <= 1e-6, drift, 1e-6);

    // Time reversal: forward, negate momenta, forward, negate.
    {
        RunOptions opt;
        opt.dt = p.config.integration.dt;
        opt.duration = p.config.integration.duration;
        opt.sample_stride = p.config.integration.sample_stride;
        opt.override_recurrence_guard = p.config.integration.override_recurrence_guard;
        opt.recurrence_safety = p.config.integration.recurrence_safety;

        const SystemState fwd = make_state(p.config.initial.x0, p.config.initial.p0, r.data);
        SystemState st = run(r.bath, p.osc, fwd, opt).final_state;
        st.p = -st.p;
        for (double& q : st.pi) q = -q;
        st = run(r.bath, p.osc, st, opt).final_state;
        st.p = -st.p;
        for (double& q : st.pi) q = -q;

        double scale = std::max(std::abs(fwd.x), std::abs(fwd.p));
        for (std::size_t j = 0; j < r.bath.size(); ++j)
            scale = std::max({scale, std::abs(fwd.eta[j]), std::abs(fwd.pi[j])});
        scale = std::max(scale, 1.0);
        double err = std::max(std::abs(st.x - fwd.x), std::abs(st.p - fwd.p));
        for (std::size_t j = 0; j < r.bath.size(); ++j)
            err = std::max({err, std::abs(st.eta[j] - fwd.eta[j]), std::abs(st.pi[j] - fwd.pi[j])});
        check("time_reversal", err <= 1e-9 * scale, err / scale, 1e-9);
    }

    // Duhamel residual on a reduced copy (small bath, short horizon).
    {
        Pipeline small = p;
        small.config.discretization.n_modes = std::min(p.config.discretization.n_modes, 128);
        small.config.integration.duration = std::min(p.config.integration.duration, 20.0);
        small.config.integration.override_recurrence_guard = true;
        FullRun rs = full_run(small, /*dense_psi=*/true, /*bath_samples=*/true);
        DuhamelReport dh = duhamel_check(rs.record, rs.bath, rs.data);
        const double rel = dh.max_residual / std::max(dh.max_eta, 1e-300);
        check("duhamel_residual", rel <= 1e-4, rel, 1e-4);
    }

    // Bath-energy identity at T/4, T/2, T.
    {
        const double T = r.record.duration;
        const std::vector<double> cps{0.25 * T, 0.5 * T, T};
        const auto res = energy_identity_residual(r.record, r.bath, r.data, cps);
        double worst = 0.0;
        for (double v : res) worst = std::max(worst, v);
        check("energy_identity", worst <= 1e-3, worst, 1e-3);
    }

    // Full vs reduced on a horizon capped at 40 time units.
    {
        Pipeline capped = p;
        capped.config.integration.duration = std::min(p.config.integration.duration, 40.0);
        FullRun rf = full_run(capped);
        TrajectoryRecord rg = gle_from(capped, rf.bath, rf.data, capped.config.integration.duration);
        double gap = 0.0;
        const std::size_t n = std::min(rf.record.x.size(), rg.x.size());
        for (std::size_t i = 0; i < n; ++i)
            gap = std::max(gap, std::abs(rf.record.x[i] - rg.x[i]));
        check("full_vs_gle", gap <= 1e-3, gap, 1e-3);
    }

    report["failures"] = failures;
    write_json(p.out / "verify_report.json", report);
    return failures;
}

// --- classify ----------------------------------------------------------------

json classification_json(const Pipeline& p, const ClassificationReport& rep)
{
    json j;
    j["config"] = p.hash;
    j["predicted"] = regime_name(rep.predicted);
    j["measured"] = regime_name(rep.measured);
    j["match"] = rep.predicted == rep.measured;
    j["lambda_predicted"] = rep.lambda_predicted ? json(*rep.lambda_predicted) : json(nullptr);
    j["lambda_measured"] = rep.lambda_measured ? json(*rep.lambda_measured) : json(nullptr);
    j["alpha"] = {{"re", rep.alpha.real()}, {"im", rep.alpha.imag()}, {"abs", std::abs(rep.alpha)}};
    j["x_infinity"] = rep.x_infinity ? json(*rep.x_infinity) : json(nullptr);
    j["matched_critical_point"] =
        rep.matched_critical_point ? json(*rep.matched_critical_point) : json(nullptr);
    j["critical_points"] = rep.critical_points;
    j["diagnostics"] = {{"decay_ratio", rep.decay_ratio},
                        {"amp_variation", rep.amp_variation},
                        {"fit_residual", rep.fit_residual},
                        {"late_std", rep.late_std},
                        {"scale", rep.scale},
                        {"persistence", rep.persistence},
                        {"notes", rep.notes}};
    j["thresholds"] = {{"decay_ratio_max", rep.options_used.decay_ratio_max},
                       {"amp_variation_max", rep.options_used.amp_variation_max},
                       {"fit_residual_max", rep.options_used.fit_residual_max},
                       {"converge_std_max", rep.options_used.converge_std_max},
                       {"converge_grad_max", rep.options_used.converge_grad_max},
                       {"persistence_min", rep.options_used.persistence_min},
                       {"window", rep.options_used.window},
                       {"hop", rep.options_used.hop}};
    return j;
}

int cmd_classify(const Cli& cli)
{
    Pipeline p = make_pipeline(cli);

    TrajectoryRecord rec;
    DiscreteBath bath;
    if (p.config.integration.engine == Engine::Gle) {
        bath = sample_modes(p.spec, p.quad, p.config.discretization.n_modes);
        BathInitialData data = bath_initial(bath, bath_kind(p.config), p.config.initial.seed,
                                            p.config.initial.temperature,
                                            p.config.initial.envelope_scale);
        rec = gle_from(p, bath, data, p.config.integration.duration);
    } else {
        FullRun r = full_run(p);
        bath = std::move(r.bath);
        rec = std::move(r.record);
    }

    const double K = dissipation_constant(p.spec, p.quad).value;
    const ClassificationReport rep = classify(rec, p.spec, p.osc, K, p.quad, p.config.analysis);
    const json j = classification_json(p, rep);
    write_json(p.out / "classification.json", j);

    if (p.config.output.write_windows) {
        const double sample_dt = rec.times.size() > 1 ? rec.times[1] - rec.times[0] : rec.dt;
        const WindowedPeaksResult wp =
            windowed_peaks(rec.x, sample_dt, p.config.analysis.window, p.config.analysis.hop,
                           p.config.analysis.peak_rel_threshold);
        std::ofstream out(p.out / "windows.csv", std::ios::binary);
        out << "# bathsim windows v1 config=" << p.hash << "\n";
        out << "window,t_start,frequency,amplitude\n";
        for (std::size_t m = 0; m < wp.windows.size(); ++m)
            for (const SpectralPeak& peak : wp.windows[m].peaks)
                out << m << ',' << format_g17(wp.windows[m].t_start) << ','
                    << format_g17(peak.frequency) << ',' << format_g17(peak.amplitude) << '\n';
    }

    std::cout << j.dump(2) << std::endl;
    return 0;
}

// --- sweep --------------------------------------------------------------------

struct SweepRow {
    double value{0.0};
    std::string predicted{"Unresolved"};
    std::string measured{"Unresolved"};
    double lambda_predicted{std::nan("")};
    double lambda_measured{std::nan("")};
    double alpha_abs{std::nan("")};
    double x_infinity{std::nan("")};
};

int cmd_sweep(const Cli& cli)
{
    Pipeline p = make_pipeline(cli);
    const auto& values = p.config.sweep.values;
    std::vector<SweepRow> rows(values.size());

    auto run_entry = [&](std::size_t idx) {
        ExperimentConfig entry = p.config;
        if (p.config.sweep.parameter == "v") {
            entry.V0_coeffs = {0.0, 0.0, 0.5 * values[idx]};
        } else if (p.config.sweep.parameter == "c") {
            entry.spectrum.amplitude = values[idx];
        } else {
            throw InvalidArgument("sweep parameter must be 'v' or 'c'");
        }
        Pipeline ep = p;
        ep.config = entry;
        ep.hash = config_hash(entry);
        ep.spec = build_spectrum(entry);
        ep.osc = build_oscillator(entry);
        ep.quad = build_quadrature(entry);

        SweepRow row;
        row.value = values[idx];
        FullRun r = full_run(ep);
        const double K = dissipation_constant(ep.spec, ep.quad).value;
        ClassificationReport rep = classify(r.record, ep.spec, ep.osc, K, ep.quad, entry.analysis);
        row.predicted = regime_name(rep.predicted);
        row.measured = regime_name(rep.measured);
        if (rep.lambda_predicted) row.lambda_predicted = *rep.lambda_predicted;
        if (rep.lambda_measured) row.lambda_measured = *rep.lambda_measured;
        row.alpha_abs = std::abs(rep.alpha);
        if (rep.x_infinity) row.x_infinity = *rep.x_infinity;
        rows[idx] = row;
    };

    const int workers = std::max(1, p.config.sweep.workers);
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::string first_error;
    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= values.size()) return;
            try {
                run_entry(idx);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw Error("sweep entry failed: " + first_error);

    std::ofstream out(p.out / "sweep.csv", std::ios::binary);
    out << "# bathsim sweep v1 config=" << p.hash << " parameter=" << p.config.sweep.parameter
        << "\n";
    out << "value,predicted,measured,lambda_predicted,lambda_measured,alpha_abs,x_infinity\n";
    for (const SweepRow& row : rows) {
        out << format_g17(row.value) << ',' << row.predicted << ',' << row.measured << ','
            << format_g17(row.lambda_predicted) << ',' << format_g17(row.lambda_measured) << ','
            << format_g17(row.alpha_abs) << ',' << format_g17(row.x_infinity) << '\n';
        std::cout << p.config.sweep.parameter << "=" << row.value << "  predicted=" << row.predicted
                  << "  measured=" << row.measured << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"oscillator + thermostat simulator and spectral analysis toolkit"};
    app.require_subcommand(1);

    Cli cli;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", cli.out_override, "output directory override");
        sub->add_option("--workers", cli.workers_override, "sweep worker limit");
        sub->add_flag("--override-recurrence-guard", cli.override_guard,
                      "run past the finite-bath recurrence guard");
    };

    CLI::App* spectrum = app.add_subcommand("spectrum", "spectral functionals and hypothesis checks");
    CLI::App* simulate = app.add_subcommand("simulate", "integrate the full coupled system");
    CLI::App* gle = app.add_subcommand("gle", "integrate the reduced memory-kernel equation");
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite; nonzero exit on breach");
    CLI::App* classify_cmd = app.add_subcommand("classify", "predict and measure the final regime");
    CLI::App* sweep = app.add_subcommand("sweep", "scan a parameter range");
    for (CLI::App* sub : {spectrum, simulate, gle, verify, classify_cmd, sweep}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (spectrum->parsed()) return cmd_spectrum(cli);
        if (simulate->parsed()) return cmd_simulate(cli);
        if (gle->parsed()) return cmd_gle(cli);
        if (verify->parsed()) return cmd_verify(cli);
        if (classify_cmd->parsed()) return cmd_classify(cli);
        if (sweep->parsed()) return cmd_sweep(cli);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
