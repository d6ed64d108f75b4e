#pragma once

#include <stdexcept>
#include <string>

namespace gbma {

// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / index mismatches between parameters, data and draws.
struct ShapeError : Error {
    using Error::Error;
};

// Evaluation inside a pole of the loss (e.g. a location estimate on top of
// a sensor position).
struct SingularityError : Error {
    using Error::Error;
};

// Linear system has no unique solution (unregularized rank-deficient ridge).
struct SingularSystemError : Error {
    using Error::Error;
};

// Curvature constants are unavailable or not certified for the requested use.
struct ConstantsError : Error {
    using Error::Error;
};

// Requested stepsize violates a convergence condition; message names the
// violated limit.
struct InfeasibleStepsizeError : Error {
    using Error::Error;
};

// Non-finite aggregate observation or tripped runaway-iterate guard.
struct DivergenceError : Error {
    using Error::Error;
};

// SNR is undefined for the requested operating point (zero noise or zero
// signal power).
struct UndefinedSnrError : Error {
    using Error::Error;
};

// Estimator window rejected (overlaps the noise plateau, empty, ...).
struct WindowError : Error {
    using Error::Error;
};

// Bad scenario configuration: unknown key, missing field, invalid value.
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem-level failure while reading or writing artifacts.
struct IoError : Error {
    using Error::Error;
};

// Malformed dataset file (wrong column count, non-numeric cell, empty file).
struct FormatError : Error {
    using Error::Error;
};

}  // namespace gbma
