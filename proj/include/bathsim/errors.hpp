// errors.hpp - exception hierarchy shared by all bathsim components

#pragma once

#include <stdexcept>
#include <string>

namespace bathsim {

// Base class so callers can catch everything coming out of the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad arguments or contract violations detected before any computation.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// A quadrature did not converge within the requested tolerance.  This is the
// runtime signal that an integrability hypothesis fails for the given bath.
struct QuadratureError : Error {
    explicit QuadratureError(const std::string& what) : Error(what) {}
};

// Query outside the domain where an operation is defined (gap kernel outside
// the gap, tabulated spectrum outside its table, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

// A trajectory left the regime where the finite bath mimics the continuum,
// or the state stopped being finite.
struct IntegrationError : Error {
    explicit IntegrationError(const std::string& what) : Error(what) {}
};

} // namespace bathsim
