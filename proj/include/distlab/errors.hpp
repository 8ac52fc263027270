#pragma once

#include <stdexcept>
#include <string>

namespace distlab {

// Shape/argument violations.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidShape : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NegativeStd : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyArchitecture : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidToken : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InsufficientSamples : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TooFewStudents : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TooFewResponses : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NotADistribution : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ZeroVector : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonPositiveVariance : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures.
struct SingularDesign : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteGradient : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateRegression : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tolerance breach in an experiment run (CLI exit code 3).
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ingestion / configuration / IO (CLI exit codes 2 and 4).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonNumericCell : ParseError {
    using ParseError::ParseError;
};
struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace distlab
