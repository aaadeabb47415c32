#pragma once

#include <stdexcept>
#include <string>

namespace pitchvi {

// Base for all library errors. CLI maps ValidationError -> exit 1,
// everything else -> exit 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input: malformed files, unknown vocabulary, missing references,
// out-of-domain arguments.
struct ValidationError : Error {
    using Error::Error;
};

struct ParseError : ValidationError {
    ParseError(const std::string& what, long line)
        : ValidationError(what + " (line " + std::to_string(line) + ")"), line(line) {}
    long line;
};

struct VocabularyError : ValidationError {
    using ValidationError::ValidationError;
};

struct ReferentialError : ValidationError {
    using ValidationError::ValidationError;
};

struct DomainError : ValidationError {
    using ValidationError::ValidationError;
};

// Internally inconsistent data (e.g. events recorded under zero exposure).
struct DataError : Error {
    using Error::Error;
};

// Non-finite objective during optimization.
struct OptimError : Error {
    OptimError(const std::string& what, long iter) : Error(what), iter(iter) {}
    long iter;
};

}  // namespace pitchvi
