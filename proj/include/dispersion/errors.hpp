#ifndef DISPERSION_ERRORS_HPP_
#define DISPERSION_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dispersion {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pmf validation
struct NegativeWeight : Error { using Error::Error; };
struct ZeroMass : Error { using Error::Error; };
struct NotNormalized : Error { using Error::Error; };

// Domain / parameter validation
struct OutOfDomain : Error { using Error::Error; };
struct TruncationTooSmall : Error { using Error::Error; };
struct MeanMismatch : Error { using Error::Error; };

// Integration
struct StepUnstable : Error { using Error::Error; };
struct NonUniformSampling : Error { using Error::Error; };
struct OffGrid : Error { using Error::Error; };

// Rate fitting
struct WindowTooSmall : Error { using Error::Error; };
struct AllFloored : Error { using Error::Error; };

// Stochastic simulation
struct InvalidPlacement : Error { using Error::Error; };

// File / format handling
struct ParseError : Error { using Error::Error; };

}  // namespace dispersion

#endif  // DISPERSION_ERRORS_HPP_
