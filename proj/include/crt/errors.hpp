#pragma once

#include <stdexcept>
#include <string>

namespace crt {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown by ray/segment queries that would read tail infima past the
// trustworthy part of a truncated two-sided contour.
struct OutOfSafeRange : std::out_of_range {
    OutOfSafeRange(const std::string& what, double safe_bound)
        : std::out_of_range(what + " (safe bound " + std::to_string(safe_bound) + ")"),
          safe_bound(safe_bound) {}
    double safe_bound;
};

struct InvalidState : std::logic_error {
    using std::logic_error::logic_error;
};

struct InvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// A pipeline stage failed; `stage` names it and what() carries the cause.
struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& cause)
        : std::runtime_error(stage + ": " + cause), stage(stage) {}
    std::string stage;
};

}  // namespace crt
