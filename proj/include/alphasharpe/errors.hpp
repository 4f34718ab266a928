#pragma once

#include <stdexcept>
#include <string>

namespace alphasharpe {

// Error taxonomy mirrored by CLI exit codes:
//   ConfigError -> 2, DataError (and subclasses) -> 3, NumericalError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Malformed input files (bad dates, bad numbers, missing columns).
class InputError : public DataError {
public:
    using DataError::DataError;
};

// Structurally valid input violating a domain invariant.
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

// Not enough data for the requested computation.
class SizeError : public DataError {
public:
    using DataError::DataError;
};

class EmptyUniverseError : public DataError {
public:
    using DataError::DataError;
};

// Correlation undefined (zero rank variance, all ties).
class UndefinedCorrelationError : public DataError {
public:
    using DataError::DataError;
};

class FoldDegenerateError : public DataError {
public:
    using DataError::DataError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// External candidate generator could not produce a valid descriptor.
class GenerationRejectedError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

} // namespace alphasharpe
