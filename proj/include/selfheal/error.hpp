#pragma once

#include <stdexcept>
#include <string>

namespace selfheal {

/// Base class for all errors raised by the library. The CLI maps each
/// subclass onto a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration value is out of range or missing.
class InvalidConfiguration : public Error {
public:
    using Error::Error;
};

/// A nodal field violates the preconditions of a constitutive law.
class InvalidField : public Error {
public:
    using Error::Error;
};

class SolverDivergence : public Error {
public:
    SolverDivergence(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// NaN or Inf appeared in a simulated field.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// The initial damage integral is zero, so healing is undefined.
class DegenerateCrack : public Error {
public:
    using Error::Error;
};

class InvalidDataset : public Error {
public:
    using Error::Error;
};

/// Training data contains a single class.
class DegenerateLabels : public Error {
public:
    using Error::Error;
};

class TrainingDivergence : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class CorruptModel : public Error {
public:
    using Error::Error;
};

}  // namespace selfheal
