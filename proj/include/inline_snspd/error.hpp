#pragma once

#include <stdexcept>
#include <string>

namespace inline_snspd {

// Argument outside the mathematical domain of an operation (negative length,
// target absorption >= 1, zero slew rate, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Caller violated a documented precondition that is not a pure domain issue
// (too few samples, wrong source variant, unsorted input).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inconsistent configuration: channel layout, missing keys, bad sections.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed tag file or CSV input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A normalization or estimator is undefined for the given data.
class UndefinedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace inline_snspd
