#include "bathsim/quadrature.hpp"
#include "bathsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace bathsim {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    if (n < 1 || n > 512) throw InvalidArgument("gauss_legendre: order must be in [1, 512]");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);

    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess for the i-th root of P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and its derivative.
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

void gauss_legendre_on(int n, double a, double b,
                       std::vector<double>& nodes, std::vector<double>& weights)
{
    gauss_legendre(n, nodes, weights);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        nodes[i] = mid + half * nodes[i];
        weights[i] *= half;
    }
}

namespace {

double composite_pass(const std::function<double(double)>& f,
                      double a, double b, int panels,
                      const std::vector<double>& ref_nodes,
                      const std::vector<double>& ref_weights)
{
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        const double half = 0.5 * h;
        double panel = 0.0;
        for (std::size_t i = 0; i < ref_nodes.size(); ++i)
            panel += ref_weights[i] * f(mid + half * ref_nodes[i]);
        sum += panel * half;
    }
    return sum;
}

// Fixed 7- and 15-point rules used by the adaptive estimator.
struct G7G15 {
    std::vector<double> n7, w7, n15, w15;
    G7G15()
    {
        gauss_legendre(7, n7, w7);
        gauss_legendre(15, n15, w15);
    }
};

struct Interval {
    double a, b, value, err;
};

void eval_interval(const std::function<double(double)>& f, const G7G15& rules,
                   double a, double b, Interval& out)
{
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double g7 = 0.0, g15 = 0.0;
    for (int i = 0; i < 7; ++i) g7 += rules.w7[i] * f(mid + half * rules.n7[i]);
    for (int i = 0; i < 15; ++i) g15 += rules.w15[i] * f(mid + half * rules.n15[i]);
    g7 *= half;
    g15 *= half;
    out = Interval{a, b, g15, std::abs(g15 - g7)};
}

} // namespace

QuadResult composite_gl(const std::function<double(double)>& f,
                        double a, double b, int panels, int points)
{
    if (!(b > a)) throw InvalidArgument("composite_gl: empty interval");
    if (panels < 1 || points < 2) throw InvalidArgument("composite_gl: bad rule parameters");

    std::vector<double> nodes, weights;
    gauss_legendre(points, nodes, weights);

    const double fine = composite_pass(f, a, b, panels, nodes, weights);
    const int coarse_panels = std::max(1, panels / 2);
    const double coarse = composite_pass(f, a, b, coarse_panels, nodes, weights);

    QuadResult r;
    r.value = fine;
    r.error_estimate = std::abs(fine - coarse);
    r.converged = true;
    return r;
}

QuadResult adaptive_gl(const std::function<double(double)>& f,
                       double a, double b, double abs_tol, double rel_tol,
                       int max_subdivisions, int initial_panels)
{
    if (!(b > a)) throw InvalidArgument("adaptive_gl: empty interval");
    if (abs_tol <= 0.0 || rel_tol <= 0.0) throw InvalidArgument("adaptive_gl: tolerances must be positive");
    static const G7G15 rules;

    initial_panels = std::clamp(initial_panels, 1, 2048);
    auto worse = [](const Interval& x, const Interval& y) { return x.err < y.err; };
    std::priority_queue<Interval, std::vector<Interval>, decltype(worse)> queue(worse);

    double total = 0.0, total_err = 0.0;
    const double h0 = (b - a) / initial_panels;
    for (int p = 0; p < initial_panels; ++p) {
        Interval iv{};
        eval_interval(f, rules, a + p * h0, a + (p + 1) * h0, iv);
        total += iv.value;
        total_err += iv.err;
        queue.push(iv);
    }

    int used = initial_panels;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && !queue.empty()) {
        if (used >= max_subdivisions) {
            QuadResult r{total, total_err, false};
            return r;
        }
        Interval worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) continue;  // interval at roundoff width
        Interval left{}, right{};
        eval_interval(f, rules, worst.a, mid, left);
        eval_interval(f, rules, mid, worst.b, right);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        queue.push(left);
        queue.push(right);
        ++used;
    }
    const bool converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    return QuadResult{total, total_err, converged};
}

QuadResult integrate(const std::function<double(double)>& f,
                     double a, double b, const QuadratureSpec& spec,
                     int initial_panels)
{
    if (spec.rule == QuadRule::CompositeGaussLegendre) {
        const int panels = std::max(spec.panels, initial_panels);
        return composite_gl(f, a, b, panels, spec.points_per_panel);
    }
    QuadResult r = adaptive_gl(f, a, b, spec.abs_tol, spec.rel_tol,
                               spec.max_subdivisions, initial_panels);
    if (!r.converged)
        throw QuadratureError("adaptive quadrature did not converge: error estimate " +
                              std::to_string(r.error_estimate) + " above tolerance");
    return r;
}

} // namespace bathsim
