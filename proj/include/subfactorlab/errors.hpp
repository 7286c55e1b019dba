#pragma once

#include <stdexcept>
#include <string>

namespace sfl {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operands live in incompatible algebras (strand count, shading, or modulus differ).
struct DimensionMismatchError : Error {
    explicit DimensionMismatchError(const std::string& msg) : Error(msg) {}
};

// An index or size parameter is outside its valid range.
struct IndexError : Error {
    explicit IndexError(const std::string& msg) : Error(msg) {}
};

// A structural axiom that the input was assumed to satisfy fails numerically.
struct AxiomViolationError : Error {
    explicit AxiomViolationError(const std::string& msg) : Error(msg) {}
};

// A derived object (connection, weighting, identification) cannot be extracted
// because the data does not have the required shape (e.g. an intertwiner space
// of dimension != 1).
struct ExtractionError : Error {
    explicit ExtractionError(const std::string& msg) : Error(msg) {}
};

// Malformed user input (JSON schema violations, bad CLI arguments, unreadable files).
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

} // namespace sfl
