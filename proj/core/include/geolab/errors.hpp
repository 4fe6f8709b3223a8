#pragma once

#include <stdexcept>
#include <string>

namespace geolab {

// Invalid argument shapes/sizes (wrong vector length, empty input, ...).
struct ArityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain of an operation.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Inconsistent distribution/teacher/experiment specification.
struct SpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite values or failed numeric procedure.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File ingestion failure; carries the offending coordinates when known.
struct IngestionError : std::runtime_error {
    IngestionError(const std::string& msg, long row = -1, long col = -1)
        : std::runtime_error(msg), row(row), col(col) {}
    long row;
    long col;
};

}  // namespace geolab
