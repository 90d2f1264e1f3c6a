#pragma once

#include <stdexcept>
#include <string>

namespace mlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or matrix shapes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument is outside its valid range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A call violated an API contract (e.g. backward on a non-scalar).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input file structure is wrong (missing columns, bad header).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A cell could not be parsed. Carries the 1-based data row.
class ParseError : public FormatError {
public:
    ParseError(const std::string& what, std::size_t row)
        : FormatError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Linear system is singular or rank deficient.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Regression cannot be formed (e.g. constant input series).
class DegenerateRegressionError : public Error {
public:
    using Error::Error;
};

class SampleSizeError : public Error {
public:
    using Error::Error;
};

/// A matrix expected to be positive definite is not.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

/// Not enough data to train.
class DataError : public Error {
public:
    using Error::Error;
};

/// Object used before it is ready (e.g. untrained model).
class StateError : public Error {
public:
    using Error::Error;
};

/// Evaluation task cannot be scored (single class, constant target, ...).
class DegenerateTaskError : public Error {
public:
    using Error::Error;
};

}  // namespace mlab
