// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pmb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config / usage errors
struct InvalidConfig : Error {
    using Error::Error;
};
struct ConfigParseError : Error {
    using Error::Error;
};
struct InvalidSpec : Error {
    using Error::Error;
};
struct InvalidArgument : Error {
    using Error::Error;
};

// Numeric kernel errors
struct NonDivisibleShape : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};

// Bank / cache errors
struct NonMonotonicTimestamp : Error {
    using Error::Error;
};
struct OutOfOrderAppend : Error {
    using Error::Error;
};
struct NoTraffic : Error {
    using Error::Error;
};

// Protocol errors
struct QueryOutOfRange : Error {
    using Error::Error;
};

// File I/O errors
struct IoError : Error {
    using Error::Error;
};
struct BadMagic : IoError {
    using IoError::IoError;
};
struct VersionMismatch : IoError {
    using IoError::IoError;
};
struct TruncatedFile : IoError {
    TruncatedFile(const std::string& msg, std::size_t offset) : IoError(msg), byte_offset(offset) {}
    std::size_t byte_offset;
};

}  // namespace pmb
