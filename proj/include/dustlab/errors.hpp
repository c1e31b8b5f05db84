#pragma once

#include <stdexcept>
#include <string>

namespace dustlab {

// Base class for everything thrown on purpose by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Construction / validation failures (bad inputs, exit 2 territory).
struct ValidationError : Error {
  using Error::Error;
};

// Numerical / domain failures discovered mid-computation (exit 3 territory).
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : ValidationError { using ValidationError::ValidationError; };
struct OverlapViolationError : ValidationError { using ValidationError::ValidationError; };
struct AtomCapError : ValidationError { using ValidationError::ValidationError; };
struct DegenerateSimplexError : ValidationError { using ValidationError::ValidationError; };
struct DegenerateCentersError : ValidationError { using ValidationError::ValidationError; };
struct DisconnectedGraphError : ValidationError { using ValidationError::ValidationError; };
struct InadmissiblePartitionError : ValidationError { using ValidationError::ValidationError; };
struct EmptyRadiiError : ValidationError { using ValidationError::ValidationError; };
struct InvalidExponentError : ValidationError { using ValidationError::ValidationError; };

struct NoWitnessError : DomainError { using DomainError::DomainError; };
struct BoxTooSmallError : DomainError { using DomainError::DomainError; };
struct MassCollapseError : DomainError { using DomainError::DomainError; };
struct EmptyIntersectionError : DomainError { using DomainError::DomainError; };
struct SingularGramError : DomainError { using DomainError::DomainError; };
struct NewtonDivergenceError : DomainError { using DomainError::DomainError; };
struct ChartBoundaryError : DomainError { using DomainError::DomainError; };
struct OffVarietyError : DomainError { using DomainError::DomainError; };
struct EmptySliceError : DomainError { using DomainError::DomainError; };
struct InsufficientSpanError : DomainError { using DomainError::DomainError; };
struct ResolutionError : DomainError { using DomainError::DomainError; };
struct UnderResolvedGridError : DomainError { using DomainError::DomainError; };
struct NormalizationError : DomainError { using DomainError::DomainError; };
struct BoxCoverageError : DomainError { using DomainError::DomainError; };
struct InvariantViolationError : DomainError { using DomainError::DomainError; };

}  // namespace dustlab
