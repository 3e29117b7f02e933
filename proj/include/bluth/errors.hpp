#pragma once

#include <stdexcept>
#include <string>

namespace bluth {

// Malformed or truncated HSB1/BLTH payloads.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's precondition.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Illegal edit of the tree (e.g. splitting an internal node).
struct StructuralError : std::logic_error {
  using std::logic_error::logic_error;
};

// Numeric degeneracies the caller is expected to handle.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures (missing, unreadable or unwritable paths).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GrowthStalledError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bluth
