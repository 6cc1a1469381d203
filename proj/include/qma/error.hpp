#pragma once

#include <stdexcept>
#include <string>

namespace qma {

/// Invalid user input: malformed config, expression, matrix file, or a violated precondition.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: degenerate eigenvalue grouping, non-convergence, unstable damping.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qma
