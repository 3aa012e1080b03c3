#pragma once

#include <stdexcept>
#include <string>

namespace ccomm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed textual input. `position` is 1-based (character or line,
/// depending on the reader).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Inputs violate a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Too few nullspace dimensions to place the requested number of messages.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Rank deficiency, loss of definiteness or a tripped condition guard.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An iterative solver finished without a feasible point.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace ccomm
