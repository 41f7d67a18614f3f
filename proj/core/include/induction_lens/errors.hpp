#pragma once

#include <stdexcept>
#include <string>

namespace ilens {

// Bad user input: out-of-range token ids, malformed arguments, invalid positions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ShapeError : public InputError {
public:
    using InputError::InputError;
};

// Empty slices, arguments outside an operation's domain.
class DomainError : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

// A weights or archive file failed validation.
class CorruptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// NaN/Inf where finite values are required, training divergence.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ilens
