#pragma once

#include <stdexcept>
#include <string>

namespace ssgp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible domain (e.g. a nonpositive lengthscale).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Matrix/vector dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Operation is not defined for the given kernel combination (e.g. product with Brownian motion).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (bad CSV row, nonmonotone timestamps, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Evaluation is undefined for the given labels (e.g. no positive label).
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: singular or indefinite matrix, non-finite likelihood.
/// Carries the time index (and latent index where meaningful), -1 when unknown.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, long time_index = -1, long latent_index = -1)
        : Error(decorate(what, time_index, latent_index)), time_index_(time_index), latent_index_(latent_index) {}

    long time_index() const noexcept { return time_index_; }
    long latent_index() const noexcept { return latent_index_; }

private:
    static std::string decorate(const std::string& what, long t, long k) {
        std::string msg = what;
        if (k >= 0) msg += " (latent " + std::to_string(k) + ")";
        if (t >= 0) msg += " (time index " + std::to_string(t) + ")";
        return msg;
    }

    long time_index_;
    long latent_index_;
};

/// Rank-deficient loading matrix passed to orthogonalization.
class DegenerateLoadingError : public NumericalError {
public:
    DegenerateLoadingError(const std::string& what, double smallest_singular_value)
        : NumericalError(what + " (smallest singular value " + std::to_string(smallest_singular_value) + ")"),
          smallest_singular_value_(smallest_singular_value) {}

    double smallest_singular_value() const noexcept { return smallest_singular_value_; }

private:
    double smallest_singular_value_;
};

}  // namespace ssgp
