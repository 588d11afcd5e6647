#include "bathsim/polynomial.hpp"
#include "bathsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bathsim {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

double Polynomial::operator()(double x) const
{
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial Polynomial::derivative() const
{
    if (coeffs_.size() <= 1) return Polynomial{};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * static_cast<double>(k);
    return Polynomial(std::move(d));
}

Polynomial Polynomial::operator-(const Polynomial& other) const
{
    std::vector<double> c(std::max(coeffs_.size(), other.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
    for (std::size_t i = 0; i < other.coeffs_.size(); ++i) c[i] -= other.coeffs_[i];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(const Polynomial& other) const
{
    if (coeffs_.empty() || other.coeffs_.empty()) return Polynomial{};
    std::vector<double> c(coeffs_.size() + other.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < other.coeffs_.size(); ++j)
            c[i + j] += coeffs_[i] * other.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::scaled(double s) const
{
    std::vector<double> c = coeffs_;
    for (double& v : c) v *= s;
    return Polynomial(std::move(c));
}

int Polynomial::degree() const
{
    for (std::size_t i = coeffs_.size(); i-- > 0;)
        if (coeffs_[i] != 0.0) return static_cast<int>(i);
    return -1;
}

double Polynomial::leading_coefficient() const
{
    const int d = degree();
    return d < 0 ? 0.0 : coeffs_[static_cast<std::size_t>(d)];
}

namespace {

double bisect_root(const Polynomial& p, double lo, double hi, double tol)
{
    double flo = p(lo);
    for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fm = p(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Cauchy bound: all real roots lie in [-R, R].
double root_bound(const Polynomial& p)
{
    const int d = p.degree();
    if (d <= 0) return 1.0;
    const double lead = std::abs(p.leading_coefficient());
    double m = 0.0;
    for (int i = 0; i < d; ++i) m = std::max(m, std::abs(p.coefficients()[static_cast<std::size_t>(i)]));
    return 1.0 + m / lead;
}

} // namespace

std::vector<double> Polynomial::real_roots(double tol) const
{
    const int d = degree();
    if (d < 0) throw InvalidArgument("real_roots: zero polynomial has every point as a root");
    if (d == 0) return {};
    if (d == 1) return {-coeffs_[0] / coeffs_[1]};
    if (d > 32) throw InvalidArgument("real_roots: degree too large");

    // The derivative's roots split the axis into monotone pieces.
    std::vector<double> crit = derivative().real_roots(tol);
    const double bound = root_bound(*this);
    std::vector<double> grid;
    grid.push_back(-bound);
    for (double c : crit)
        if (c > -bound && c < bound) grid.push_back(c);
    grid.push_back(bound);
    std::sort(grid.begin(), grid.end());

    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double a = grid[i], b = grid[i + 1];
        const double fa = (*this)(a), fb = (*this)(b);
        if (fa == 0.0) roots.push_back(a);
        if ((fa < 0.0) != (fb < 0.0)) roots.push_back(bisect_root(*this, a, b, tol));
    }
    const double fb = (*this)(grid.back());
    if (fb == 0.0) roots.push_back(grid.back());

    std::sort(roots.begin(), roots.end());
    // Merge near-duplicates produced by roots landing on grid points.
    std::vector<double> out;
    for (double r : roots) {
        if (out.empty() || std::abs(r - out.back()) > 10.0 * tol * std::max(1.0, std::abs(r)))
            out.push_back(r);
    }
    return out;
}

} // namespace bathsim
