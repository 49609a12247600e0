#pragma once

#include <stdexcept>
#include <string>

namespace hyforest {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, configuration, or contract violation (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A band required by an operation is absent from a bundle.
class MissingBandError : public ValidationError {
public:
    explicit MissingBandError(const std::string& band)
        : ValidationError("missing band " + band), band_(band) {}
    const std::string& band() const noexcept { return band_; }

private:
    std::string band_;
};

/// File system or on-disk format failure (CLI exit code 3).
class IoError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public IoError {
public:
    using IoError::IoError;
};

class ManifestError : public IoError {
public:
    using IoError::IoError;
};

class TruncatedFileError : public IoError {
public:
    using IoError::IoError;
};

/// Numerical failure: divergence, singular geometry, degenerate integrals (CLI exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
};

class SingularGeometryError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateProfileError : public NumericError {
public:
    using NumericError::NumericError;
};

class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

class NoSolutionError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace hyforest
