#pragma once

#include <stdexcept>
#include <string>

namespace mush {

/// Base type for every error raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Image / segmentation
struct ConstantImageError : Error {
  using Error::Error;
};

// Detection
struct ZeroMagnitudeError : Error {
  using Error::Error;
};

// Localization
struct NonPositiveDepthError : Error {
  using Error::Error;
};
struct MissingDepthError : Error {
  using Error::Error;
};
struct InvalidCircleError : Error {
  using Error::Error;
};

// Point clouds / registration
struct EmptyCloudError : Error {
  using Error::Error;
};
struct DegenerateNeighborhoodError : Error {
  using Error::Error;
};
struct InsufficientCorrespondencesError : Error {
  using Error::Error;
};
struct NoCorrespondencesError : Error {
  using Error::Error;
};
struct NotARotationError : Error {
  using Error::Error;
};
struct ZeroVectorError : Error {
  using Error::Error;
};

// Evaluation
struct UndefinedScoreError : Error {
  using Error::Error;
};
struct NoValidPixelsError : Error {
  using Error::Error;
};

// Synthetic scenes
struct CapBehindPlaneError : Error {
  using Error::Error;
};

// File I/O
struct IoError : Error {
  using Error::Error;
};

}  // namespace mush
