#pragma once

#include <stdexcept>
#include <string>

namespace mblz {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// NaN/Inf or underflow during time stepping.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, long step) : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

class BoundaryError : public Error {
public:
    using Error::Error;
};

class EmptyOrbitalError : public Error {
public:
    using Error::Error;
};

class DegenerateWidthError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace mblz
