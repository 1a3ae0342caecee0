#pragma once

#include <stdexcept>
#include <string>

namespace loadcast {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or inconsistent input data (CSV ingestion, gaps, shape of series).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Invalid configuration (unknown key, out-of-range value).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numeric failure: NaN/Inf produced by an operation, diverging training.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Checkpoint/report files that cannot be read back (version, corruption).
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

} // namespace loadcast
