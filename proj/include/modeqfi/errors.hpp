#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace modeqfi {

// All library errors carry a short stable code ("grid-mismatch",
// "truncation-too-small", ...) next to the human-readable message.
// Callers that need to branch should match on code(), not on what().
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Rejected inputs: bad parameters, mismatched grids or spaces, bad configs.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Numerical failures: inadequate truncation, lost positivity, broken
// orthonormality, non-Hermitian inputs.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace modeqfi
