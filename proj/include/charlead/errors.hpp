#pragma once

#include <stdexcept>
#include <string>

namespace charlead {

// Bad input data: unreadable files, empty corpora, malformed records.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: non-finite loss or gradients.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unusable configuration or command line.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorruptCheckpointError : DataError {
    explicit CorruptCheckpointError(const std::string& what)
        : DataError("corrupt checkpoint: " + what) {}
};

struct UnsupportedVersionError : DataError {
    explicit UnsupportedVersionError(const std::string& what)
        : DataError("unsupported checkpoint version: " + what) {}
};

}  // namespace charlead
