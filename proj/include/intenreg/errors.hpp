#pragma once

#include <stdexcept>
#include <string>

namespace intenreg {

// Shape disagreement between rasters/fields that must match.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A parameter or config value violates its invariant.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input is structurally valid but carries no usable signal
// (e.g. zero total intensity, no non-background labels).
struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed file content.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level failure (open/read/write).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during optimization.
struct DivergenceError : std::runtime_error {
    int iteration;
    DivergenceError(const std::string& msg, int iter)
        : std::runtime_error(msg + " (iteration " + std::to_string(iter) + ")"),
          iteration(iter) {}
};

}  // namespace intenreg
