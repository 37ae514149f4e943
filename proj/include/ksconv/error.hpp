#pragma once

#include <stdexcept>
#include <string>

namespace ksconv {

/// Operand shapes are incompatible (kernel larger than map, channel mismatch, ...).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A transpose-convolution spec whose derived output would be empty.
class InvalidSpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated file contents (PPM, SCT1, config files).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void throw_dimension(const std::string& what) { throw DimensionError(what); }

} // namespace detail
} // namespace ksconv
