#include "bathsim/discretize.hpp"
#include "bathsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace bathsim {

DiscreteBath sample_modes(const BathSpectrum& spec, const QuadratureSpec& quad, int n_modes)
{
    if (n_modes < 2) throw InvalidArgument("sample_modes: need at least two modes");
    const double lo = spec.nu0;
    const double hi = quad.nu_max;
    if (!(hi > lo)) throw InvalidArgument("sample_modes: nu_max must exceed the gap edge");

    // Keep at least two nodes per panel and at most the Gauss-order cap.
    int panels = std::clamp(quad.panels, 1, n_modes / 2);
    panels = std::max(panels, (n_modes + 511) / 512);
    // Distribute the modes as evenly as possible over the panels.
    std::vector<int> per_panel(static_cast<std::size_t>(panels), n_modes / panels);
    for (int k = 0; k < n_modes % panels; ++k) per_panel[static_cast<std::size_t>(k)] += 1;

    DiscreteBath bath;
    bath.nodes.reserve(static_cast<std::size_t>(n_modes));
    bath.weights.reserve(static_cast<std::size_t>(n_modes));
    bath.couplings.reserve(static_cast<std::size_t>(n_modes));

    const double h = (hi - lo) / panels;
    std::vector<double> nodes, weights;
    for (int p = 0; p < panels; ++p) {
        gauss_legendre_on(per_panel[static_cast<std::size_t>(p)], lo + p * h, lo + (p + 1) * h,
                          nodes, weights);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            bath.nodes.push_back(nodes[i]);
            bath.weights.push_back(2.0 * weights[i]);  // even extension
            bath.couplings.push_back(a_hat(spec, nodes[i]));
        }
    }
    return bath;
}

double discrete_dissipation_constant(const DiscreteBath& bath)
{
    double sum = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double a = bath.couplings[j];
        sum += bath.weights[j] * a * a / (bath.nodes[j] * bath.nodes[j]);
    }
    return sum;
}

double recurrence_time(const DiscreteBath& bath)
{
    if (bath.size() < 2) throw InvalidArgument("recurrence_time: need at least two modes");
    double min_gap = bath.nodes[1] - bath.nodes[0];
    for (std::size_t j = 2; j < bath.size(); ++j)
        min_gap = std::min(min_gap, bath.nodes[j] - bath.nodes[j - 1]);
    if (!(min_gap > 0.0)) throw InvalidArgument("recurrence_time: nodes must be strictly increasing");
    return 2.0 * M_PI / min_gap;
}

std::optional<double> discrete_eigenfrequency(const DiscreteBath& bath, double v,
                                              double tol, double guard)
{
    if (bath.size() == 0) throw InvalidArgument("discrete_eigenfrequency: empty bath");
    if (tol <= 0.0) throw InvalidArgument("discrete_eigenfrequency: tol must be positive");
    const double Kd = discrete_dissipation_constant(bath);
    if (!(v - Kd > 0.0))
        throw InvalidArgument("discrete_eigenfrequency requires v - discrete_K > 0");

    auto secular = [&](double lam) {
        double s = v - lam * lam;
        for (std::size_t j = 0; j < bath.size(); ++j) {
            const double a = bath.couplings[j];
            s -= bath.weights[j] * a * a / (bath.nodes[j] * bath.nodes[j] - lam * lam);
        }
        return s;
    };

    const double nu_min = bath.nodes.front();
    const double cap = nu_min * (1.0 - guard);
    if (!(cap > 0.0)) return std::nullopt;
    if (secular(cap) > 0.0) return std::nullopt;  // no root below the first mode

    // S(0) = v - Kd > 0 >= S(cap): bisect the sign change.
    double a = 0.0, b = cap;
    double mid = 0.5 * (a + b);
    for (int iter = 0; iter < 200 && (b - a) > tol; ++iter) {
        mid = 0.5 * (a + b);
        if (secular(mid) > 0.0)
            a = mid;
        else
            b = mid;
    }
    return mid;
}

bool BathInitialData::all_zero() const
{
    for (double e : eta0)
        if (e != 0.0) return false;
    for (double e : etadot0)
        if (e != 0.0) return false;
    return true;
}

namespace {

// Uniform in (0,1] from the raw 64-bit stream; keeps the sampling scheme
// independent of library-specific distribution implementations.
double uniform01(std::mt19937_64& rng)
{
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace

BathInitialData bath_initial(const DiscreteBath& bath, BathInitKind kind,
                             std::uint64_t seed, double temperature, double envelope_scale)
{
    BathInitialData data;
    data.kind = kind;
    data.eta0.assign(bath.size(), 0.0);
    data.etadot0.assign(bath.size(), 0.0);

    if (kind == BathInitKind::Thermal) {
        if (!(temperature > 0.0))
            throw InvalidArgument("bath_initial: thermal data needs temperature > 0");
        if (!(envelope_scale > 0.0))
            throw InvalidArgument("bath_initial: envelope scale must be positive");
        std::mt19937_64 rng(seed);
        for (std::size_t j = 0; j < bath.size(); ++j) {
            const double nu = bath.nodes[j];
            const double env = std::exp(-(nu / envelope_scale) * (nu / envelope_scale));
            // Exponentially distributed intensity, uniform phase.
            const double intensity = -temperature * env * std::log(uniform01(rng));
            const double phase = 2.0 * M_PI * uniform01(rng);
            const double amp = std::sqrt(intensity);
            data.eta0[j] = amp * std::cos(phase) / nu;
            data.etadot0[j] = amp * std::sin(phase);
        }
    }

    double energy = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double nu = bath.nodes[j];
        energy += bath.weights[j] *
                  (data.etadot0[j] * data.etadot0[j] + nu * nu * data.eta0[j] * data.eta0[j]);
    }
    data.energy = energy;
    return data;
}

void thermal_energy_stats(const DiscreteBath& bath, double temperature,
                          double envelope_scale, double& mean, double& stddev)
{
    mean = 0.0;
    double var = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j) {
        const double nu = bath.nodes[j];
        const double env = std::exp(-(nu / envelope_scale) * (nu / envelope_scale));
        const double m = bath.weights[j] * temperature * env;
        mean += m;
        var += m * m;  // exponential intensity: variance equals mean^2
    }
    stddev = std::sqrt(var);
}

void write_bath_csv(std::ostream& out, const DiscreteBath& bath)
{
    out << "nu,weight,a_hat\n";
    char buf[128];
    for (std::size_t j = 0; j < bath.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", bath.nodes[j], bath.weights[j],
                      bath.couplings[j]);
        out << buf;
    }
}

DiscreteBath read_bath_csv(std::istream& in)
{
    DiscreteBath bath;
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("read_bath_csv: empty input");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        double vals[3];
        for (double& v : vals) {
            if (!std::getline(row, cell, ',')) throw InvalidArgument("read_bath_csv: short row");
            v = std::stod(cell);
        }
        bath.nodes.push_back(vals[0]);
        bath.weights.push_back(vals[1]);
        bath.couplings.push_back(vals[2]);
    }
    return bath;
}

} // namespace bathsim
