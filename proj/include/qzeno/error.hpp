#pragma once

#include <stdexcept>
#include <string>

namespace qzeno {

// Precondition violated by the caller (bad index, non-finite angle, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mathematically undefined request (zero variance, t >= N*T, singular matrix).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A document (snapshot, circuit, config) failed validation. `path` names the
// offending field, e.g. "qubits[3].T2_us".
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Iterative solver gave up.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problem too large for the dense backends.
class SizeLimitError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace qzeno
