#pragma once

#include <stdexcept>
#include <string>

namespace edgelab {

/// Base class for all edgelab errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParamsError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct InsufficientSamplesError : Error {
    using Error::Error;
};

/// DBM step would push two eigenvalues below the gap floor; dt is too large.
struct CollisionError : Error {
    using Error::Error;
};

struct TooManyVerticesError : Error {
    using Error::Error;
};

/// Correction coefficients outside the perturbative guard |a_{2l}| <= 0.5.
struct InvalidCorrectionError : Error {
    using Error::Error;
};

struct NoUpperHalfPlaneRootError : Error {
    using Error::Error;
};

struct EdgeNotFoundError : Error {
    using Error::Error;
};

struct QuadratureError : Error {
    using Error::Error;
};

struct ConvergenceFailureError : Error {
    using Error::Error;
};

struct RegimeViolationError : Error {
    using Error::Error;
};

struct EmptySampleError : Error {
    using Error::Error;
};

/// Config file failed to parse or validate; the message names the field.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace edgelab
