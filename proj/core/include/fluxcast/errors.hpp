#pragma once

#include <stdexcept>
#include <string>

namespace fluxcast {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/tensor dimensions.
struct ShapeError : Error {
    using Error::Error;
};

// Bad or missing input data (files, masks, ranges).
struct DataError : Error {
    using Error::Error;
};

// NaN/Inf surfaced during computation; message carries the op name.
struct NumericError : Error {
    using Error::Error;
};

// Invalid configuration (unknown keys, out-of-range values).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace fluxcast
