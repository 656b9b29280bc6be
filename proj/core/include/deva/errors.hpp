#pragma once

#include <stdexcept>
#include <string>

namespace deva {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct DegenerateBasis : Error {
    using Error::Error;
};

struct InvalidConfig : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct UndefinedForZero : Error {
    using Error::Error;
};

// Raised when an optimizer or run produces non-finite values; carries the
// step index at which the breakdown was detected.
struct NumericalBreakdown : Error {
    explicit NumericalBreakdown(long step_index, const std::string& what_arg = "non-finite value")
        : Error(what_arg + " at step " + std::to_string(step_index)), step(step_index) {}
    long step;
};

}  // namespace deva
