#pragma once

#include <stdexcept>
#include <string>

namespace driftfit {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- shape / input validation -------------------------------------------
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidDimension : Error { using Error::Error; };
struct EmptyData : Error { using Error::Error; };
struct DegenerateData : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct RegionOutOfRange : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };

// ---- numerical / model conditions ---------------------------------------
struct SingularSigma : Error { using Error::Error; };
struct ZeroDirection : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };
struct PhaseDegenerate : Error { using Error::Error; };
struct SignDegenerate : Error { using Error::Error; };
struct SingularityError : Error { using Error::Error; };
struct ChartDomainError : Error { using Error::Error; };
struct SingularHessian : Error { using Error::Error; };
struct DegenerateFirstBatch : Error { using Error::Error; };

// ---- optimization / orchestration ----------------------------------------
struct OptimizerFailure : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct RefitFailure : Error { using Error::Error; };

// ---- io -------------------------------------------------------------------
struct IoError : Error { using Error::Error; };
struct ParseError : Error {
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};
struct IncompleteGrid : Error { using Error::Error; };
struct NonMonotoneFrequency : Error { using Error::Error; };

}  // namespace driftfit
