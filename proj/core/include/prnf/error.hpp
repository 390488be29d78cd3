#pragma once

#include <stdexcept>
#include <string>

namespace prnf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension or contract violation in matrix/tape operations.
class ShapeError : public Error {
public:
    using Error::Error;
};

// |det| of a Jacobian block fell below the singularity floor.
// sample_index is -1 when the failure is not tied to a dataset row.
class SingularJacobianError : public Error {
public:
    explicit SingularJacobianError(const std::string& msg, long sample_index = -1)
        : Error(msg), sample_index(sample_index) {}
    long sample_index;
};

class DegenerateDensityError : public Error {
public:
    using Error::Error;
};

// Invalid or missing configuration value; message names the field.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public IoError {
public:
    using IoError::IoError;
};

// Training aborted (non-finite loss, all samples singular, ...).
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& msg, long epoch = -1)
        : Error(msg), epoch(epoch) {}
    long epoch;
};

} // namespace prnf
