#pragma once

#include <stdexcept>
#include <string>

namespace recov {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments, out-of-domain parameters, violated preconditions.
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// File system and parsing failures. Parse errors carry the line number in the message.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Serialized artifact with an unknown or incompatible version tag.
struct VersionError : Error {
    explicit VersionError(const std::string& msg) : Error(msg) {}
};

// Numerical failure (degenerate system, undefined metric, no comparable pairs).
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace recov
