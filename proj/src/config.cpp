#include "bathsim/config.hpp"
#include "bathsim/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bathsim {

using nlohmann::json;

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

Engine parse_engine(const std::string& s)
{
    if (s == "full") return Engine::Full;
    if (s == "gle") return Engine::Gle;
    if (s == "both") return Engine::Both;
    throw InvalidArgument("config: unknown engine '" + s + "'");
}

std::string engine_name(Engine e)
{
    switch (e) {
        case Engine::Full: return "full";
        case Engine::Gle: return "gle";
        case Engine::Both: return "both";
    }
    return "full";
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("config: invalid JSON: ") + e.what());
    }

    ExperimentConfig c;
    c.base_dir = base_dir;

    if (j.contains("spectrum")) {
        const json& s = j.at("spectrum");
        maybe(s, "family", c.spectrum.family);
        maybe(s, "nu0", c.spectrum.nu0);
        maybe(s, "amplitude", c.spectrum.amplitude);
        maybe(s, "edge", c.spectrum.edge);
        maybe(s, "table", c.spectrum.table_path);
        maybe(s, "rho0_amplitude", c.spectrum.rho0_amplitude);
        maybe(s, "rho0_power", c.spectrum.rho0_power);
        maybe(s, "kappa_amplitude", c.spectrum.kappa_amplitude);
        maybe(s, "kappa_power", c.spectrum.kappa_power);
        maybe(s, "kappa_decay", c.spectrum.kappa_decay);
    }
    if (j.contains("oscillator")) {
        const json& o = j.at("oscillator");
        maybe(o, "V0", c.V0_coeffs);
        maybe(o, "f", c.f_coeffs);
    }
    if (j.contains("discretization")) {
        const json& d = j.at("discretization");
        maybe(d, "N", c.discretization.n_modes);
        maybe(d, "rule", c.discretization.rule);
        maybe(d, "panels", c.discretization.panels);
        maybe(d, "points_per_panel", c.discretization.points_per_panel);
        maybe(d, "max_subdivisions", c.discretization.max_subdivisions);
        maybe(d, "nu_max", c.discretization.nu_max);
        maybe(d, "abs_tol", c.discretization.abs_tol);
        maybe(d, "rel_tol", c.discretization.rel_tol);
    }
    if (j.contains("integration")) {
        const json& i = j.at("integration");
        maybe(i, "dt", c.integration.dt);
        maybe(i, "T", c.integration.duration);
        maybe(i, "sample_stride", c.integration.sample_stride);
        maybe(i, "kernel_source", c.integration.kernel_source);
        maybe(i, "override_recurrence_guard", c.integration.override_recurrence_guard);
        maybe(i, "recurrence_safety", c.integration.recurrence_safety);
        if (i.contains("engine")) c.integration.engine = parse_engine(i.at("engine").get<std::string>());
    }
    if (j.contains("initial")) {
        const json& i = j.at("initial");
        maybe(i, "x0", c.initial.x0);
        maybe(i, "p0", c.initial.p0);
        maybe(i, "bath", c.initial.bath_kind);
        maybe(i, "temperature", c.initial.temperature);
        maybe(i, "envelope_scale", c.initial.envelope_scale);
        maybe(i, "seed", c.initial.seed);
    }
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        maybe(a, "window", c.analysis.window);
        maybe(a, "hop", c.analysis.hop);
        maybe(a, "peak_rel_threshold", c.analysis.peak_rel_threshold);
        maybe(a, "persistence_min", c.analysis.persistence_min);
        maybe(a, "decay_ratio_max", c.analysis.decay_ratio_max);
        maybe(a, "amp_variation_max", c.analysis.amp_variation_max);
        maybe(a, "fit_residual_max", c.analysis.fit_residual_max);
        maybe(a, "converge_std_max", c.analysis.converge_std_max);
        maybe(a, "converge_grad_max", c.analysis.converge_grad_max);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        maybe(o, "dir", c.output.directory);
        maybe(o, "write_trajectory", c.output.write_trajectory);
        maybe(o, "write_kernel", c.output.write_kernel);
        maybe(o, "write_bath", c.output.write_bath);
        maybe(o, "write_gap_table", c.output.write_gap_table);
        maybe(o, "write_windows", c.output.write_windows);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        maybe(s, "parameter", c.sweep.parameter);
        maybe(s, "values", c.sweep.values);
        maybe(s, "workers", c.sweep.workers);
    }

    if (!(c.integration.dt > 0.0)) throw InvalidArgument("config: integration.dt must be > 0");
    if (!(c.integration.duration > 0.0)) throw InvalidArgument("config: integration.T must be > 0");
    if (c.discretization.n_modes < 2) throw InvalidArgument("config: discretization.N must be >= 2");
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string dir = ".";
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return parse_config(buf.str(), dir);
}

std::string canonical_json(const ExperimentConfig& c)
{
    json j;
    j["spectrum"] = {{"family", c.spectrum.family},
                     {"nu0", c.spectrum.nu0},
                     {"amplitude", c.spectrum.amplitude},
                     {"edge", c.spectrum.edge},
                     {"table", c.spectrum.table_path},
                     {"rho0_amplitude", c.spectrum.rho0_amplitude},
                     {"rho0_power", c.spectrum.rho0_power},
                     {"kappa_amplitude", c.spectrum.kappa_amplitude},
                     {"kappa_power", c.spectrum.kappa_power},
                     {"kappa_decay", c.spectrum.kappa_decay}};
    j["oscillator"] = {{"V0", c.V0_coeffs}, {"f", c.f_coeffs}};
    j["discretization"] = {{"N", c.discretization.n_modes},
                           {"rule", c.discretization.rule},
                           {"panels", c.discretization.panels},
                           {"points_per_panel", c.discretization.points_per_panel},
                           {"max_subdivisions", c.discretization.max_subdivisions},
                           {"nu_max", c.discretization.nu_max},
                           {"abs_tol", c.discretization.abs_tol},
                           {"rel_tol", c.discretization.rel_tol}};
    j["integration"] = {{"dt", c.integration.dt},
                        {"T", c.integration.duration},
                        {"sample_stride", c.integration.sample_stride},
                        {"engine", engine_name(c.integration.engine)},
                        {"kernel_source", c.integration.kernel_source},
                        {"override_recurrence_guard", c.integration.override_recurrence_guard},
                        {"recurrence_safety", c.integration.recurrence_safety}};
    j["initial"] = {{"x0", c.initial.x0},
                    {"p0", c.initial.p0},
                    {"bath", c.initial.bath_kind},
                    {"temperature", c.initial.temperature},
                    {"envelope_scale", c.initial.envelope_scale},
                    {"seed", c.initial.seed}};
    j["analysis"] = {{"window", c.analysis.window},
                     {"hop", c.analysis.hop},
                     {"peak_rel_threshold", c.analysis.peak_rel_threshold},
                     {"persistence_min", c.analysis.persistence_min},
                     {"decay_ratio_max", c.analysis.decay_ratio_max},
                     {"amp_variation_max", c.analysis.amp_variation_max},
                     {"fit_residual_max", c.analysis.fit_residual_max},
                     {"converge_std_max", c.analysis.converge_std_max},
                     {"converge_grad_max", c.analysis.converge_grad_max}};
    j["output"] = {{"dir", c.output.directory},
                   {"write_trajectory", c.output.write_trajectory},
                   {"write_kernel", c.output.write_kernel},
                   {"write_bath", c.output.write_bath},
                   {"write_gap_table", c.output.write_gap_table},
                   {"write_windows", c.output.write_windows}};
    j["sweep"] = {{"parameter", c.sweep.parameter},
                  {"values", c.sweep.values},
                  {"workers", c.sweep.workers}};
    return j.dump();
}

std::string config_hash(const ExperimentConfig& config)
{
    const std::string text = canonical_json(config);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

BathSpectrum build_spectrum(const ExperimentConfig& config)
{
    const SpectrumConfig& s = config.spectrum;
    if (s.family == "gaussian_gapless") return BathSpectrum::gaussian_gapless(s.amplitude);
    if (s.family == "gaussian_gap") return BathSpectrum::gaussian_gap(s.nu0, s.amplitude, s.edge);
    if (s.family == "tabulated") {
        if (s.table_path.empty()) throw InvalidArgument("config: tabulated spectrum needs a table path");
        std::string path = s.table_path;
        if (!path.empty() && path.front() != '/' && !config.base_dir.empty())
            path = config.base_dir + "/" + path;
        std::ifstream in(path);
        if (!in) throw InvalidArgument("config: cannot open spectrum table " + path);
        return BathSpectrum::tabulated(read_table_csv(in), s.nu0);
    }
    if (s.family == "klein_gordon") {
        const double m0 = s.nu0;
        const double ra = s.rho0_amplitude, rp = s.rho0_power;
        const double ka = s.kappa_amplitude, kp = s.kappa_power, kd = s.kappa_decay;
        auto rho0 = [ra, rp](double sv) { return ra * std::pow(std::abs(sv), rp) * std::exp(-sv * sv); };
        auto kappa = [ka, kp, kd, m0](double nu) {
            const double an = std::abs(nu);
            if (an <= m0) return 0.0;
            return ka * std::pow(an * an - m0 * m0, kp) * std::exp(-kd * an * an);
        };
        return klein_gordon_spectrum(rho0, m0, kappa);
    }
    throw InvalidArgument("config: unknown spectrum family '" + s.family + "'");
}

OscillatorModel build_oscillator(const ExperimentConfig& config)
{
    OscillatorModel osc;
    osc.V0 = Polynomial(config.V0_coeffs);
    osc.f = Polynomial(config.f_coeffs);
    return osc;
}

QuadratureSpec build_quadrature(const ExperimentConfig& config)
{
    QuadratureSpec q;
    const DiscretizationConfig& d = config.discretization;
    if (d.rule == "composite_gl")
        q.rule = QuadRule::CompositeGaussLegendre;
    else if (d.rule == "adaptive")
        q.rule = QuadRule::Adaptive;
    else
        throw InvalidArgument("config: unknown quadrature rule '" + d.rule + "'");
    q.panels = d.panels;
    q.points_per_panel = d.points_per_panel;
    q.max_subdivisions = d.max_subdivisions;
    q.nu_max = d.nu_max;
    q.abs_tol = d.abs_tol;
    q.rel_tol = d.rel_tol;
    return q;
}

BathInitKind bath_kind(const ExperimentConfig& config)
{
    if (config.initial.bath_kind == "zero") return BathInitKind::Zero;
    if (config.initial.bath_kind == "thermal") return BathInitKind::Thermal;
    throw InvalidArgument("config: unknown bath kind '" + config.initial.bath_kind + "'");
}

std::uint64_t effective_seed(const ExperimentConfig& config)
{
    if (const char* env = std::getenv("BATHSIM_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
        throw InvalidArgument("BATHSIM_SEED must be an unsigned integer");
    }
    return config.initial.seed;
}

std::string format_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record,
                          const std::string& hash)
{
    out << "# bathsim trajectory v1 config=" << hash << "\n";
    out << "t,x,p,psi,phi,E_total,E_bath\n";
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        out << format_g17(record.times[i]) << ',' << format_g17(record.x[i]) << ','
            << format_g17(record.p[i]) << ',' << format_g17(record.psi[i]) << ','
            << format_g17(record.phi[i]) << ',' << format_g17(record.e_total[i]) << ','
            << format_g17(record.e_bath[i]) << '\n';
    }
}

std::vector<TablePoint> read_table_csv(std::istream& in)
{
    std::vector<TablePoint> table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        // Skip a header row if present.
        if (line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos) continue;
        std::istringstream row(line);
        std::string cell;
        TablePoint p;
        if (!std::getline(row, cell, ',')) continue;
        p.nu = std::stod(cell);
        if (!std::getline(row, cell, ',')) throw InvalidArgument("spectrum table: missing a_hat column");
        p.a_hat = std::stod(cell);
        table.push_back(p);
    }
    return table;
}

} // namespace bathsim
