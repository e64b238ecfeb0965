#ifndef AFFDYN_ERRORS_HPP
#define AFFDYN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace affdyn {

/// Bad input: malformed data, dimension mismatch, non-commuting family,
/// operation outside a precondition. The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact arithmetic was requested for a value that has no closed form in the
/// exact backend (e.g. exp of a generic transcendental). Retry in float mode.
class UnsupportedExact : public InputError {
public:
    using InputError::InputError;
};

/// A numerical routine failed its own residual check. The CLI maps this to
/// exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace affdyn

#endif // AFFDYN_ERRORS_HPP
