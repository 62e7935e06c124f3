// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gpfn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, out-of-range value).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The requested combination of options has no defined behaviour
/// (e.g. a KL step with eta != 1, a BFN sampler on a GPFN-trained net).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a metric (e.g. a covariance that is not PSD).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The feature classifier did not reach the accuracy the metrics rely on.
class AccuracyBelowThreshold : public Error {
public:
    using Error::Error;
};

/// Base for file format problems.
class FormatError : public Error {
public:
    using Error::Error;
};

class BadMagic : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedFile : public FormatError {
public:
    using FormatError::FormatError;
};

class DimensionOverflow : public FormatError {
public:
    using FormatError::FormatError;
};

class ChecksumMismatch : public FormatError {
public:
    using FormatError::FormatError;
};

class UnknownVersion : public FormatError {
public:
    using FormatError::FormatError;
};

class InconsistentLayout : public FormatError {
public:
    using FormatError::FormatError;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace gpfn
