#pragma once

#include <stdexcept>
#include <string>

namespace pulselabel {

// Invalid filter/engine/service configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A window that cannot yield a trustworthy HRV feature vector. Callers must
// keep the window but exclude it from density estimation.
class QualityTooLow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input payload; carries the offending field name.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pulselabel
