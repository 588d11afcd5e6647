// polynomial.hpp - small dense polynomials for potentials and coupling shapes

#pragma once

#include <vector>

namespace bathsim {

// Coefficients in ascending order: p(x) = c[0] + c[1] x + c[2] x^2 + ...
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs);

    double operator()(double x) const;
    Polynomial derivative() const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(const Polynomial& other) const;
    Polynomial scaled(double s) const;

    // Degree after dropping trailing (near-)zero coefficients; -1 for the
    // zero polynomial.
    int degree() const;
    double leading_coefficient() const;
    const std::vector<double>& coefficients() const { return coeffs_; }

    bool is_zero() const { return degree() < 0; }

    // All real roots, ascending, found by recursive bracketing between the
    // critical points of the polynomial.  Exact for degree <= 1; resolves
    // multiple roots to the tolerance of the bisection.
    std::vector<double> real_roots(double tol = 1e-12) const;

private:
    std::vector<double> coeffs_;
};

} // namespace bathsim
