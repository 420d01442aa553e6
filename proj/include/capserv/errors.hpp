#pragma once

#include <stdexcept>
#include <string>

namespace capserv {

// Parameter or geometry rejected before a run starts. The message names the
// offending field so harness output stays actionable.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a rehearsal trace cannot produce a usable profile, or when a
// window is read before it has warmed up.
struct CalibrationError : std::runtime_error {
    explicit CalibrationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Coverage is a ratio over creamed area; with no cream it has no value.
struct UndefinedCoverageError : std::runtime_error {
    explicit UndefinedCoverageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace capserv
